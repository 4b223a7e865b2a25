#include "dsrf/aanet/train.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "dsrf/core/error.hpp"
#include "dsrf/imgcore/resample.hpp"

namespace dsrf::aanet {

namespace {

struct Prepared {
  Tensor input;  // network input (bicubic upsample or LR)
  Tensor base;   // bicubic upsample
  Tensor hr;
  double altitude;
};

Tensor crop_tensor(const Tensor& t, int y0, int x0, int h, int w) {
  Tensor out(1, t.c(), h, w);
  for (int c = 0; c < t.c(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(0, c, y, x) = t.at(0, c, y0 + y, x0 + x);
    }
  }
  return out;
}

void stack_into(Tensor& dst, int n, const Tensor& src) {
  std::copy(src.data(), src.data() + src.size(), dst.plane(n, 0));
}

void check_sample(const SrSample& s, const NetworkConfig& cfg) {
  if (s.lr.channels() != 3 || s.hr.channels() != 3) throw InvalidInput("training samples must be RGB");
  if (s.hr.height() != scaled_length(s.lr.height(), cfg.scale_num, cfg.scale_den) ||
      s.hr.width() != scaled_length(s.lr.width(), cfg.scale_num, cfg.scale_den)) {
    throw InvalidInput("training sample HR size does not match the network scale");
  }
}

Prepared prepare(const SrSample& s, const NetworkConfig& cfg) {
  Prepared p;
  p.base = bicubic_upsample_batch({s.lr}, cfg.scale_num, cfg.scale_den);
  p.input = cfg.head == Head::pre_upsample ? p.base : image_to_tensor(s.lr);
  p.hr = image_to_tensor(s.hr);
  p.altitude = s.altitude_m;
  return p;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::map<double, double> evaluate_psnr(AaFcnn& net, const std::vector<SrSample>& samples,
                                       const metrics::EvalOptions& opts) {
  std::map<double, std::pair<double, int>> acc;
  for (const auto& s : samples) {
    const Image out = net.infer(s.lr, s.altitude_m);
    auto& a = acc[s.altitude_m];
    a.first += metrics::psnr_y(out, s.hr, opts).db;
    ++a.second;
  }
  std::map<double, double> res;
  for (const auto& [alt, a] : acc) res[alt] = a.first / a.second;
  return res;
}

std::map<double, double> bicubic_psnr(const std::vector<SrSample>& samples, int num, int den,
                                      const metrics::EvalOptions& opts) {
  std::map<double, std::pair<double, int>> acc;
  for (const auto& s : samples) {
    const Image up = resize_bicubic(s.lr, scaled_length(s.lr.height(), num, den), scaled_length(s.lr.width(), num, den));
    auto& a = acc[s.altitude_m];
    a.first += metrics::psnr_y(up, s.hr, opts).db;
    ++a.second;
  }
  std::map<double, double> res;
  for (const auto& [alt, a] : acc) res[alt] = a.first / a.second;
  return res;
}

TrainResult train(AaFcnn& net, const std::vector<SrSample>& train_set, const std::vector<SrSample>& val_set,
                  const TrainConfig& config, std::ostream* metrics_csv) {
  if (train_set.empty()) throw InvalidInput("train: empty training set");
  if (config.steps < 0 || config.batch <= 0 || config.val_every <= 0 || config.crop < 0) {
    throw InvalidInput("train: steps, batch, val_every and crop must be non-negative (batch, val_every positive)");
  }
  const NetworkConfig& cfg = net.config();
  for (const auto& s : train_set) check_sample(s, cfg);
  for (const auto& s : val_set) check_sample(s, cfg);

  std::vector<Prepared> data;
  data.reserve(train_set.size());
  for (const auto& s : train_set) data.push_back(prepare(s, cfg));

  const bool up_head = cfg.head == Head::upsample;
  int in_crop = 0, out_crop = 0;
  if (config.crop > 0) {
    if (up_head && config.crop % cfg.scale_den != 0) {
      throw InvalidInput("train: LR crop must be a multiple of " + std::to_string(cfg.scale_den));
    }
    in_crop = config.crop;
    out_crop = up_head ? scaled_length(config.crop, cfg.scale_num, cfg.scale_den) : config.crop;
  }
  // Batched tensors need a common shape.
  for (const auto& p : data) {
    if (config.crop > 0) {
      if (p.input.h() < in_crop || p.input.w() < in_crop) throw InvalidInput("train: crop larger than a sample");
    } else if (!p.hr.same_shape(data.front().hr)) {
      throw InvalidInput("train: samples differ in size; set a crop");
    }
  }

  std::set<double> altitudes;
  for (const auto& s : val_set) altitudes.insert(s.altitude_m);
  if (metrics_csv) {
    *metrics_csv << "step,loss";
    for (double a : altitudes) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", a);
      *metrics_csv << ",val_psnr_" << buf;
    }
    *metrics_csv << "\n";
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();

  TrainResult result;
  result.losses.reserve(config.steps);
  double interval_loss = 0.0;
  int interval_steps = 0;

  auto emit = [&](int step) {
    ValidationRow row;
    row.step = step;
    row.loss = interval_steps > 0 ? interval_loss / interval_steps : 0.0;
    if (!val_set.empty()) row.psnr_by_altitude = evaluate_psnr(net, val_set, config.eval);
    if (metrics_csv) {
      *metrics_csv << step << "," << format_double(row.loss);
      for (double a : altitudes) *metrics_csv << "," << format_double(row.psnr_by_altitude[a]);
      *metrics_csv << "\n";
      metrics_csv->flush();
    }
    result.validation.push_back(std::move(row));
    interval_loss = 0.0;
    interval_steps = 0;
  };

  const Prepared& first = data.front();
  const int ih = in_crop ? in_crop : first.input.h(), iw = in_crop ? in_crop : first.input.w();
  const int oh = out_crop ? out_crop : first.hr.h(), ow = out_crop ? out_crop : first.hr.w();

  for (int step = 1; step <= config.steps; ++step) {
    const int bn = config.batch;
    Tensor input(bn, 3, ih, iw), base(bn, 3, oh, ow), target(bn, 3, oh, ow);
    std::vector<double> alts(bn);
    for (int b = 0; b < bn; ++b) {
      if (cursor >= order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const Prepared& p = data[order[cursor++]];
      alts[b] = p.altitude;
      if (config.crop == 0) {
        stack_into(input, b, p.input);
        stack_into(base, b, p.base);
        stack_into(target, b, p.hr);
        continue;
      }
      if (up_head) {
        const int d = cfg.scale_den;
        const int ny = (p.input.h() - in_crop) / d, nx = (p.input.w() - in_crop) / d;
        const int ly = d * std::uniform_int_distribution<int>(0, ny)(rng);
        const int lx = d * std::uniform_int_distribution<int>(0, nx)(rng);
        const int hy = ly / d * cfg.scale_num, hx = lx / d * cfg.scale_num;
        stack_into(input, b, crop_tensor(p.input, ly, lx, ih, iw));
        stack_into(base, b, crop_tensor(p.base, hy, hx, oh, ow));
        stack_into(target, b, crop_tensor(p.hr, hy, hx, oh, ow));
      } else {
        const int y = std::uniform_int_distribution<int>(0, p.hr.h() - out_crop)(rng);
        const int x = std::uniform_int_distribution<int>(0, p.hr.w() - out_crop)(rng);
        const Tensor c = crop_tensor(p.base, y, x, oh, ow);
        stack_into(input, b, c);
        stack_into(base, b, c);
        stack_into(target, b, crop_tensor(p.hr, y, x, oh, ow));
      }
    }
    net.params().zero_grad();
    const Tensor out = net.forward(input, base, net.codes_for(alts));
    const double loss = l1_loss(out, target);
    net.backward(l1_loss_backward(out, target));
    adam_step(net.params(), config.adam);
    result.losses.push_back(loss);
    interval_loss += loss;
    ++interval_steps;
    if (step % config.val_every == 0 || step == config.steps) emit(step);
  }
  return result;
}

}  // namespace dsrf::aanet
