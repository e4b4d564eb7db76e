// Acceptance suite: one PASS/FAIL line per criterion, raw numbers alongside.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "locaug/augment.hpp"
#include "locaug/gradcheck.hpp"
#include "locaug/hash.hpp"
#include "locaug/metrics.hpp"
#include "locaug/model.hpp"
#include "locaug/trainer.hpp"

using namespace locaug;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& line) {
  std::printf("  %s\n", line.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// ---- 1 ----------------------------------------------------------------

void gradient_correctness() {
  const auto t0 = Clock::now();
  const auto cases = default_gradcheck_cases();
  const GradCheckReport report = run_gradchecks(cases, 20);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  for (const auto& r : report.results) worst = std::max(worst, r.max_rel_error);
  for (const auto& r : report.results) {
    info(r.name + " instances=" + std::to_string(r.instances) + " max_rel_error=" + sci(r.max_rel_error));
  }
  const bool has_net = std::any_of(report.results.begin(), report.results.end(),
                                   [](const GradCheckResult& r) { return r.name.find("depth2") != std::string::npos; });
  verdict(1, report.passed() && has_net && secs <= 120.0,
          std::to_string(report.results.size()) + " cases, worst rel error " + sci(worst) + " (tol 1e-4), " + num(secs, 1) + " s (limit 120 s)");
}

// ---- 2 ----------------------------------------------------------------

double oracle_f(const Tensor& pred, const Tensor& gt) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] > 0.5, g = gt[i] > 0.5;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  if (tp + fp == 0 && tp + fn == 0) return 1.0;
  const double P = tp + fp > 0 ? tp / (tp + fp) : 0.0, R = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return 0.3 * P + R == 0 ? 0.0 : 1.3 * P * R / (0.3 * P + R);
}

double oracle_miou(const Tensor& pred, const Tensor& gt, std::size_t K) {
  double total = 0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < K; ++k) {
    double inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool p = pred[i] == k, g = gt[i] == k;
      inter += p && g;
      uni += p || g;
    }
    if (uni > 0) {
      total += inter / uni;
      ++present;
    }
  }
  return present ? total / present : 0.0;
}

void metric_oracles() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> ext(1, 8);
  std::uniform_real_distribution<double> u;
  const int pairs = 2000;
  double worst_f = 0.0, worst_iou = 0.0;
  for (int t = 0; t < pairs; ++t) {
    const std::size_t h = ext(rng), w = ext(rng);
    const double density = u(rng);
    Tensor pred({1, 1, h, w}), gt({1, 1, h, w});
    for (double& v : pred.values()) v = u(rng) < density;
    for (double& v : gt.values()) v = u(rng) < density;
    const PrecisionRecall pr = precision_recall(pred, gt);
    worst_f = std::max(worst_f, std::abs(f_measure(pr.precision, pr.recall) - oracle_f(pred, gt)));

    const std::size_t K = 2 + t % 5;
    Tensor pc({1, 1, h, w}), gc({1, 1, h, w});
    for (double& v : pc.values()) v = static_cast<double>(rng() % K);
    for (double& v : gc.values()) v = static_cast<double>(rng() % K);
    ConfusionMatrix cm(K);
    cm.accumulate(pc, gc);
    worst_iou = std::max(worst_iou, std::abs(cm.mean_iou() - oracle_miou(pc, gc, K)));
  }
  double worst_identity = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double p = i / 1000.0;
    worst_identity = std::max(worst_identity, std::abs(f_measure(p, p) - p));
  }
  verdict(2, worst_f <= 1e-12 && worst_iou <= 1e-12 && worst_identity <= 1e-12,
          std::to_string(pairs) + " mask pairs: max |F - oracle| " + sci(worst_f) + ", max |mIoU - oracle| " +
              sci(worst_iou) + "; F(p,p)=p over 1001 p, max error " + sci(worst_identity));
}

// ---- 3, 4, 8 ------------------------------------------------------------

struct CircleData {
  Dataset train, test;
};

CircleData circle_data() {
  CircleTaskConfig c;  // 64x64, radius 14, centred
  c.count = 200;
  c.seed = mix_seed(0, 1);
  CircleData d;
  d.train = gen_circle_dataset(c);
  c.count = 50;
  c.seed = mix_seed(0, 2);
  d.test = gen_circle_dataset(c);
  return d;
}

TrainConfig circle_config(Variant v, std::size_t depth, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.net.depth = depth;
  cfg.net.widths = std::vector<std::size_t>(depth, 8);
  cfg.net.spec.variant = v;
  cfg.net.seed = seed;
  cfg.optim = OptimConfig::adam_defaults();
  cfg.optim.lr = 1e-3;
  cfg.batch = 2;
  cfg.epochs = 200;
  cfg.threshold = Threshold::fixed(0.5);
  cfg.selection = SelectionMetric::foreground_iou;
  cfg.stop_at = 0.95;
  return cfg;
}

struct CircleRun {
  double final_iou = 0.0;
  double peak_iou = 0.0;
  std::size_t epochs = 0;
  std::string model_hash;
  double seconds = 0.0;
};

CircleRun run_circle(const CircleData& d, const TrainConfig& cfg) {
  const auto t0 = Clock::now();
  const TrainResult r = train(cfg, d.train, &d.test);
  CircleRun out;
  out.seconds = seconds_since(t0);
  out.epochs = r.history.size();
  out.final_iou = *r.history.back().metric;
  for (const auto& e : r.history) out.peak_iou = std::max(out.peak_iou, *e.metric);
  out.model_hash = git_blob_hash(r.net.save());
  return out;
}

void circle_criteria() {
  const CircleData d = circle_data();
  const auto t0 = Clock::now();
  int reached = 0;
  std::string seed0_hash;
  TrainConfig seed0_cfg;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TrainConfig cfg = circle_config(Variant::rgb_coord, 1, seed);
    const CircleRun r = run_circle(d, cfg);
    reached += r.final_iou >= 0.95;
    if (seed == 0) {
      seed0_hash = r.model_hash;
      seed0_cfg = cfg;
    }
    info("rgb+coord depth1 seed=" + std::to_string(seed) + " test_iou=" + num(r.final_iou) +
         " epochs=" + std::to_string(r.epochs) + " time=" + num(r.seconds, 1) + "s");
  }
  std::vector<double> rgb1_final;
  double rgb1_peak = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CircleRun r = run_circle(d, circle_config(Variant::rgb, 1, seed));
    rgb1_final.push_back(r.final_iou);
    rgb1_peak = std::max(rgb1_peak, r.peak_iou);
    info("rgb depth1 seed=" + std::to_string(seed) + " final_test_iou=" + num(r.final_iou) + " peak_test_iou=" +
         num(r.peak_iou) + " epochs=" + std::to_string(r.epochs) + " time=" + num(r.seconds, 1) + "s");
  }
  const double secs = seconds_since(t0);
  verdict(3, reached >= 4 && rgb1_peak <= 0.60 && secs <= 900.0,
          "rgb+coord reached IoU>=0.95 for " + std::to_string(reached) + "/5 seeds; rgb peak test IoU " +
              num(rgb1_peak) + " over 200 epochs (limit 0.60); " + num(secs, 1) + " s (limit 900 s)");

  std::vector<double> rgb4_final;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CircleRun r = run_circle(d, circle_config(Variant::rgb, 4, seed));
    rgb4_final.push_back(r.final_iou);
    info("rgb depth4 seed=" + std::to_string(seed) + " test_iou=" + num(r.final_iou) + " epochs=" +
         std::to_string(r.epochs) + " time=" + num(r.seconds, 1) + "s");
  }
  verdict(4, median(rgb4_final) > median(rgb1_final),
          "median test IoU depth4 rgb " + num(median(rgb4_final)) + " vs depth1 rgb " + num(median(rgb1_final)));

  const CircleRun again = run_circle(d, seed0_cfg);
  verdict(8, again.model_hash == seed0_hash && !seed0_hash.empty(),
          "rgb+coord seed 0 model hash " + seed0_hash + " vs rerun " + again.model_hash);
}

// ---- 5 ----------------------------------------------------------------

void location_bias() {
  LocationBiasConfig c;  // 64x64, three 6x6 squares
  c.count = 200;
  c.seed = mix_seed(0, 1);
  const Dataset train_set = gen_location_bias_dataset(c);
  c.count = 100;
  c.seed = mix_seed(0, 2);
  const Dataset test_set = gen_location_bias_dataset(c);

  BenchConfig bench;
  bench.base.net.depth = 2;
  bench.base.net.widths = {8, 16};
  bench.base.net.spec.norm = Normalization::symmetric;
  bench.base.optim = OptimConfig::adam_defaults();
  bench.base.optim.lr = 3e-3;
  bench.base.epochs = 40;
  bench.base.threshold = Threshold{};  // adaptive
  bench.variants = {Variant::rgb, Variant::rgb_dist, Variant::rgb_coord};
  bench.seeds = {0, 1, 2, 3, 4};
  bench.timing_trials = 1;
  const auto t0 = Clock::now();
  const BenchTable table = bench_variants(bench, train_set, test_set);
  const double secs = seconds_since(t0);
  std::printf("%s", table.text().c_str());

  const BenchRow& rgb = table.row(Variant::rgb);
  bool ok = true;
  std::string detail;
  for (Variant v : {Variant::rgb_dist, Variant::rgb_coord}) {
    const BenchRow& row = table.row(v);
    const double margin = row.mean - rgb.mean;
    const double range = std::max(spread(row.per_seed), spread(rgb.per_seed));
    ok = ok && margin > range;
    detail += std::string(to_string(v)) + " " + num(mean(row.per_seed)) + " vs rgb " + num(rgb.mean) + " (margin " +
              num(margin) + ", range " + num(range) + "); ";
  }
  verdict(5, ok, detail + num(secs, 1) + " s");
}

// ---- 6 ----------------------------------------------------------------

void parameter_counts() {
  std::size_t checked = 0;
  bool ok = true;
  for (std::size_t depth = 1; depth <= kMaxDepth; ++depth) {
    for (Variant v : {Variant::rgb, Variant::rgb_coord, Variant::rgb_dist, Variant::rgb_dist_coord, Variant::rgb_lin}) {
      for (const auto& widths : {default_widths(depth), std::vector<std::size_t>(depth, 5)}) {
        NetConfig base;
        base.depth = depth;
        base.widths = widths;
        NetConfig other = base;
        other.spec.variant = v;
        const std::size_t k = other.spec.input_channels() - 3;
        const std::size_t delta = SegNet::build(other).param_count() - SegNet::build(base).param_count();
        ok = ok && delta == k * 9 * widths[0];
        ++checked;
      }
    }
  }
  verdict(6, ok, std::to_string(checked) + " (depth, variant, widths) combinations, delta == k*9*widths[0]");
}

// ---- 7 ----------------------------------------------------------------

void overhead() {
  CircleTaskConfig c;
  c.count = 20;
  const Dataset images = gen_circle_dataset(c);
  double times[2];
  int i = 0;
  for (Variant v : {Variant::rgb, Variant::rgb_dist_coord}) {
    NetConfig cfg;
    cfg.depth = 2;
    cfg.spec.variant = v;
    times[i++] = time_inference(SegNet::build(cfg), images, 9);
  }
  const double rel = times[1] / times[0] - 1.0;
  verdict(7, rel <= 0.25,
          "depth-2 net at 64x64: rgb " + num(times[0] * 1e3, 3) + " ms/image, rgb+dist+coord " + num(times[1] * 1e3, 3) +
              " ms/image, overhead " + num(rel * 100.0, 1) + "% (limit 25%)");
}

// ---- 9 ----------------------------------------------------------------

void translation() {
  const std::size_t depth = 2, H = 48, W = 48, shift = 4, margin = 12;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u;
  std::normal_distribution<double> n(0.0, 0.1);
  Tensor img({1, 3, H, W});
  for (double& v : img.values()) v = u(rng);
  Tensor moved(img.shape());
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) moved.at(0, ch, (h + shift) % H, (w + shift) % W) = img.at(0, ch, h, w);
  double worst[2] = {0.0, 0.0};
  int i = 0;
  for (Variant v : {Variant::rgb, Variant::rgb_coord}) {
    NetConfig cfg;
    cfg.depth = depth;
    cfg.spec.variant = v;
    cfg.seed = 3;
    SegNet net = SegNet::build(cfg);
    for (auto& layer : net.layers())
      for (double& b : layer.bias.values()) b = n(rng);
    const Tensor a = net.forward(augment_image(img, cfg.spec));
    const Tensor b = net.forward(augment_image(moved, cfg.spec));
    for (std::size_t h = margin; h + margin + shift < H; ++h)
      for (std::size_t w = margin; w + margin + shift < W; ++w)
        worst[i] = std::max(worst[i], std::abs(a.at(0, 0, h, w) - b.at(0, 0, h + shift, w + shift)));
    ++i;
  }
  verdict(9, worst[0] <= 1e-9 && worst[1] > 1e-6,
          "interior discrepancy after a " + std::to_string(shift) + " px toroidal shift: rgb " +
              sci(worst[0]) + " (limit 1e-9), rgb+coord " + sci(worst[1]) + " (must differ)");
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  gradient_correctness();
  metric_oracles();
  parameter_counts();
  overhead();
  translation();
  circle_criteria();
  location_bias();
  std::printf("%s: %d failing criteria, total %.1f s\n", failures ? "FAIL" : "PASS", failures, seconds_since(t0));
  return failures ? 1 : 0;
}
