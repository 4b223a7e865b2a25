#include "dsrf/aanet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "dsrf/aanet/layers.hpp"
#include "dsrf/aanet/optim.hpp"

namespace dsrf::aanet {

std::string GradCheckReport::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s: %s checked=%d skipped=%d max_rel=%.3e max_abs=%.3e worst=%s", layer.c_str(),
                passed() ? "ok" : "FAILED", checked, skipped, max_rel_error, max_abs_error, worst.c_str());
  return buf;
}

GradCheckFailure::GradCheckFailure(const GradCheckReport& r)
    : Error("gradient check failed for layer " + r.summary()), report_(r) {}

void require_passed(const GradCheckReport& report) {
  if (!report.passed()) throw GradCheckFailure(report);
}

GradCheckReport gradient_check(const std::string& layer, const std::vector<GradVariable>& vars,
                               const std::function<double()>& loss, const std::function<void()>& analytic,
                               const std::function<std::uint64_t()>& signature, const GradCheckOptions& opts) {
  if (vars.empty()) throw InvalidInput("gradient_check: no variables for " + layer);
  if (!(opts.step > 0.0) || !(opts.tolerance > 0.0)) throw InvalidInput("gradient_check: step and tolerance must be positive");
  GradCheckReport report;
  report.layer = layer;
  report.tolerance = opts.tolerance;

  analytic();
  std::vector<std::vector<double>> grads;
  for (const auto& v : vars) {
    if (v.values->size() != v.grads->size()) {
      throw InvalidInput("gradient_check: gradient size mismatch for " + layer + "." + v.name);
    }
    grads.push_back(*v.grads);
  }
  const std::uint64_t base_sig = signature ? signature() : 0;

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::size_t total = 0;
  for (const auto& v : vars) total += v.values->size();
  if (total <= static_cast<std::size_t>(opts.max_coords)) {
    for (std::size_t k = 0; k < vars.size(); ++k) {
      for (std::size_t i = 0; i < vars[k].values->size(); ++i) coords.emplace_back(k, i);
    }
  } else {
    // Variable first, then index, so small tensors (biases, encoder) are not starved.
    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> nonempty;
    for (std::size_t k = 0; k < vars.size(); ++k) {
      if (!vars[k].values->empty()) nonempty.push_back(k);
    }
    for (int c = 0; c < opts.max_coords; ++c) {
      const std::size_t k = nonempty[std::uniform_int_distribution<std::size_t>(0, nonempty.size() - 1)(rng)];
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, vars[k].values->size() - 1)(rng);
      coords.emplace_back(k, i);
    }
  }

  for (const auto& [k, i] : coords) {
    double& x = (*vars[k].values)[i];
    const double orig = x;
    x = orig + opts.step;
    const double lp = loss();
    const std::uint64_t sp = signature ? signature() : 0;
    x = orig - opts.step;
    const double lm = loss();
    const std::uint64_t sm = signature ? signature() : 0;
    x = orig;
    if (sp != base_sig || sm != base_sig) {
      ++report.skipped;
      continue;
    }
    const double numeric = (lp - lm) / (2.0 * opts.step);
    const double a = grads[k][i];
    const double abs_err = std::abs(a - numeric);
    const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
    ++report.checked;
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    if (rel > report.max_rel_error || report.worst.empty()) {
      report.max_rel_error = std::max(rel, report.max_rel_error);
      if (rel >= report.max_rel_error) report.worst = vars[k].name + "[" + std::to_string(i) + "]";
    }
  }
  return report;
}

namespace {

Tensor random_tensor(int n, int c, int h, int w, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(n, c, h, w);
  std::normal_distribution<double> d(0.0, scale);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<GradVariable> param_vars(ParamStore& store) {
  std::vector<GradVariable> vars;
  for (auto& [name, p] : store.all()) vars.push_back({name, &p.value.vec(), &p.grad.vec()});
  return vars;
}

// Randomizes every parameter so no gradient vanishes by construction.
void randomize(ParamStore& store, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  for (auto& [name, p] : store.all()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = d(rng);
  }
}

// Weighted-sum loss: L = sum(r * f(x)), so dL/dy = r.
struct Probe {
  Tensor r;
  double operator()(const Tensor& y) {
    if (r.empty()) throw InvalidInput("probe not initialized");
    return dot(r, y);
  }
};

}  // namespace

std::vector<GradCheckReport> check_layers(const GradCheckOptions& opts) {
  std::vector<GradCheckReport> out;
  std::mt19937_64 rng(opts.seed ^ 0x5eedULL);
  GradCheckOptions o = opts;

  // conv 3x3 and 1x1
  for (int k : {3, 1}) {
    Tensor x = random_tensor(2, 3, 6, 5, rng);
    Tensor w = random_tensor(4, 3, k, k, rng, 0.3);
    Tensor b = random_tensor(1, 4, 1, 1, rng);
    Tensor r = random_tensor(2, 4, 6, 5, rng);
    Tensor dx, dw, db;
    out.push_back(gradient_check(
        k == 3 ? "conv3x3" : "conv1x1", {{"x", &x.vec(), &dx.vec()}, {"weight", &w.vec(), &dw.vec()}, {"bias", &b.vec(), &db.vec()}},
        [&] { return dot(r, conv2d_forward(x, w, b)); },
        [&] {
          dw = Tensor(w.n(), w.c(), w.h(), w.w());
          db = Tensor(b.n(), b.c(), b.h(), b.w());
          dx = conv2d_backward(x, w, r, dw, db);
        },
        nullptr, o));
  }

  {
    Tensor x = random_tensor(3, 5, 1, 1, rng);
    Tensor w = random_tensor(4, 5, 1, 1, rng, 0.5);
    Tensor b = random_tensor(1, 4, 1, 1, rng);
    Tensor r = random_tensor(3, 4, 1, 1, rng);
    Tensor dx, dw, db;
    out.push_back(gradient_check(
        "linear", {{"x", &x.vec(), &dx.vec()}, {"weight", &w.vec(), &dw.vec()}, {"bias", &b.vec(), &db.vec()}},
        [&] { return dot(r, linear_forward(x, w, b)); },
        [&] {
          dw = Tensor(w.n(), w.c(), w.h(), w.w());
          db = Tensor(b.n(), b.c(), b.h(), b.w());
          dx = linear_backward(x, w, r, dw, db);
        },
        nullptr, o));
  }

  // Elementwise activations; x contains an exact zero to exercise the subgradient.
  {
    Tensor x = random_tensor(2, 3, 4, 4, rng);
    x[0] = 0.0;
    Tensor r = random_tensor(2, 3, 4, 4, rng);
    Tensor dx;
    out.push_back(gradient_check(
        "relu", {{"x", &x.vec(), &dx.vec()}}, [&] { return dot(r, relu_forward(x)); },
        [&] { dx = relu_backward(x, r); }, [&] { return sign_hash(x) ^ (x[0] == 0.0 ? 0x9e37ULL : 0); }, o));
    out.push_back(gradient_check(
        "leaky_relu", {{"x", &x.vec(), &dx.vec()}}, [&] { return dot(r, leaky_relu_forward(x)); },
        [&] { dx = leaky_relu_backward(x, r); },
        [&] {
          Tensor neg = x;
          for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = x[i] < 0.0 ? 1.0 : 0.0;
          return sign_hash(neg, sign_hash(x));
        },
        o));
    out.push_back(gradient_check(
        "sigmoid", {{"x", &x.vec(), &dx.vec()}}, [&] { return dot(r, sigmoid_forward(x)); },
        [&] { dx = sigmoid_backward(sigmoid_forward(x), r); }, nullptr, o));
  }

  {
    const int k = 3;
    Tensor x = random_tensor(2, 3, 5, 4, rng);
    Tensor kernels = random_tensor(2, 3 * k * k, 1, 1, rng, 0.5);
    Tensor r = random_tensor(2, 3, 5, 4, rng);
    Tensor dx, dk;
    out.push_back(gradient_check(
        "depthwise", {{"x", &x.vec(), &dx.vec()}, {"kernels", &kernels.vec(), &dk.vec()}},
        [&] { return dot(r, depthwise_forward(x, kernels, k)); },
        [&] { dx = depthwise_backward(x, kernels, k, r, dk); }, nullptr, o));
  }

  {
    Tensor x = random_tensor(2, 3, 4, 5, rng);
    Tensor s = random_tensor(2, 3, 1, 1, rng);
    Tensor r = random_tensor(2, 3, 4, 5, rng);
    Tensor dx, ds;
    out.push_back(gradient_check(
        "channel_scale", {{"x", &x.vec(), &dx.vec()}, {"scale", &s.vec(), &ds.vec()}},
        [&] { return dot(r, channel_scale_forward(x, s)); },
        [&] { dx = channel_scale_backward(x, s, r, ds); }, nullptr, o));
  }

  {
    Tensor x = random_tensor(1, 2, 5, 4, rng);
    Tensor r = random_tensor(1, 2, 11, 9, rng);
    Tensor dx;
    out.push_back(gradient_check(
        "upsample_bicubic", {{"x", &x.vec(), &dx.vec()}}, [&] { return dot(r, upsample_bicubic_forward(x, 11, 9)); },
        [&] { dx = upsample_bicubic_backward(r, 5, 4); }, nullptr, o));
  }

  {
    Tensor pred = random_tensor(2, 3, 4, 4, rng);
    Tensor target = random_tensor(2, 3, 4, 4, rng);
    Tensor dp;
    out.push_back(gradient_check(
        "l1_loss", {{"pred", &pred.vec(), &dp.vec()}}, [&] { return l1_loss(pred, target); },
        [&] { dp = l1_loss_backward(pred, target); },
        [&] {
          Tensor diff = pred;
          for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = pred[i] - target[i];
          return sign_hash(diff);
        },
        o));
  }

  {
    ParamStore store;
    AltitudeEncoder enc(store, "encoder", 6, rng);
    randomize(store, rng, 0.5);
    Tensor code(3, 1, 1, 1);
    code[0] = 0.125;
    code[1] = 1.0;
    code[2] = 1.75;
    Tensor r = random_tensor(3, 6, 1, 1, rng);
    auto vars = param_vars(store);
    out.push_back(gradient_check(
        "altitude_encoder", vars, [&] { return dot(r, enc.forward(code)); },
        [&] {
          store.zero_grad();
          enc.forward(code);
          enc.backward(r);
        },
        [&] { return enc.activation_signature(); }, o));
  }

  {
    ParamStore store;
    const int c = 4, e = 5;
    Dal dal(store, "dal", c, e, 3, rng);
    randomize(store, rng, 0.4);
    Tensor feat = random_tensor(2, c, 5, 6, rng);
    Tensor emb = random_tensor(2, e, 1, 1, rng);
    Tensor r = random_tensor(2, c, 5, 6, rng);
    Tensor dfeat, de;
    auto vars = param_vars(store);
    vars.push_back({"feat", &feat.vec(), &dfeat.vec()});
    vars.push_back({"embedding", &emb.vec(), &de.vec()});
    out.push_back(gradient_check(
        "dal", vars, [&] { return dot(r, dal.forward(feat, emb)); },
        [&] {
          store.zero_grad();
          de = Tensor(emb.n(), emb.c(), 1, 1);
          dal.forward(feat, emb);
          dfeat = dal.backward(r, de);
        },
        [&] { return dal.activation_signature(); }, o));
  }

  {
    ParamStore store;
    const int c = 4, e = 5;
    Dab dab(store, "dab", c, e, 3, rng);
    randomize(store, rng, 0.4);
    Tensor feat = random_tensor(2, c, 5, 5, rng);
    Tensor emb = random_tensor(2, e, 1, 1, rng);
    Tensor r = random_tensor(2, c, 5, 5, rng);
    Tensor dfeat, de;
    auto vars = param_vars(store);
    vars.push_back({"feat", &feat.vec(), &dfeat.vec()});
    vars.push_back({"embedding", &emb.vec(), &de.vec()});
    out.push_back(gradient_check(
        "dab", vars, [&] { return dot(r, dab.forward(feat, emb)); },
        [&] {
          store.zero_grad();
          de = Tensor(emb.n(), emb.c(), 1, 1);
          dab.forward(feat, emb);
          dfeat = dab.backward(r, de);
        },
        [&] { return dab.activation_signature(); }, o));
  }

  {
    ParamStore store;
    UpsampleHead head(store, "head", 3, rng);
    randomize(store, rng, 0.4);
    Tensor feat = random_tensor(1, 3, 4, 4, rng);
    Tensor r = random_tensor(1, 3, 9, 9, rng);
    Tensor dfeat;
    auto vars = param_vars(store);
    vars.push_back({"feat", &feat.vec(), &dfeat.vec()});
    out.push_back(gradient_check(
        "upsample_head", vars, [&] { return dot(r, head.forward(feat, 9, 9)); },
        [&] {
          store.zero_grad();
          head.forward(feat, 9, 9);
          dfeat = head.backward(r);
        },
        [&] { return head.activation_signature(); }, o));
  }
  return out;
}

GradCheckReport check_network(const NetworkConfig& config, int size, const GradCheckOptions& opts) {
  AaFcnn net(config, opts.seed);
  std::mt19937_64 rng(opts.seed ^ 0xa11ULL);
  // Zero-initialized layers would block gradients to everything upstream.
  std::normal_distribution<double> d(0.0, 0.05);
  for (auto& [name, p] : net.params().all()) {
    if (name.rfind("conv_out", 0) == 0 || name.find("attn_fc2") != std::string::npos) {
      for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = d(rng);
    }
  }
  const int in_size = size;
  const int bsize = config.head == Head::upsample ? scaled_length(size, config.scale_num, config.scale_den) : size;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor input(2, 3, in_size, in_size);
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = u(rng);
  Tensor base(2, 3, bsize, bsize);
  for (std::size_t i = 0; i < base.size(); ++i) base[i] = u(rng);
  Tensor codes = net.codes_for({20.0, 120.0});
  Tensor r = random_tensor(2, 3, bsize, bsize, rng);

  auto vars = param_vars(net.params());
  auto loss = [&] { return dot(r, net.forward(input, base, codes)); };
  auto analytic = [&] {
    net.params().zero_grad();
    net.forward(input, base, codes);
    net.backward(r);
  };
  return gradient_check("aafcnn", vars, loss, analytic, [&] { return net.activation_signature(); }, opts);
}

}  // namespace dsrf::aanet
