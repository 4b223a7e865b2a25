#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "dsrf/aanet/checkpoint.hpp"
#include "dsrf/aanet/gradcheck.hpp"
#include "dsrf/aanet/layers.hpp"
#include "dsrf/aanet/network.hpp"
#include "dsrf/aanet/train.hpp"
#include "dsrf/imgcore/filter.hpp"
#include "dsrf/imgcore/resample.hpp"
#include "dsrf/metrics/metrics.hpp"
#include "test_util.hpp"

using namespace dsrf;
using namespace dsrf::aanet;

namespace {

Tensor random_tensor(int n, int c, int h, int w, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Tensor t(n, c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

double max_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Independent loop implementations used as oracles.

std::vector<double> naive_fc(const std::vector<double>& x, const Tensor& w, const Tensor& b) {
  std::vector<double> y(static_cast<std::size_t>(w.n()));
  for (int o = 0; o < w.n(); ++o) {
    double s = b.at(0, o, 0, 0);
    for (int i = 0; i < w.c(); ++i) s += w.at(o, i, 0, 0) * x[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(o)] = s;
  }
  return y;
}

std::vector<double> naive_relu(std::vector<double> v) {
  for (auto& x : v) x = std::max(x, 0.0);
  return v;
}

int sym(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int k = w.h(), r = k / 2;
  Tensor y(x.n(), w.n(), x.h(), x.w());
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < w.n(); ++o)
      for (int i = 0; i < x.h(); ++i)
        for (int j = 0; j < x.w(); ++j) {
          double s = b.at(0, o, 0, 0);
          for (int c = 0; c < x.c(); ++c)
            for (int a = 0; a < k; ++a)
              for (int bb = 0; bb < k; ++bb) {
                const int yy = i + a - r, xx = j + bb - r;
                if (yy < 0 || yy >= x.h() || xx < 0 || xx >= x.w()) continue;
                s += w.at(o, c, a, bb) * x.at(n, c, yy, xx);
              }
          y.at(n, o, i, j) = s;
        }
  return y;
}

Tensor naive_dal(Dal& dal, const Tensor& feat, const Tensor& e) {
  const int C = feat.c(), k = dal.kernel_size();
  Tensor out(feat.n(), C, feat.h(), feat.w());
  for (int n = 0; n < feat.n(); ++n) {
    std::vector<double> ev(static_cast<std::size_t>(e.c()));
    for (int i = 0; i < e.c(); ++i) ev[static_cast<std::size_t>(i)] = e.at(n, i, 0, 0);
    const auto kern = naive_fc(naive_relu(naive_fc(ev, dal.kernel_fc1().weight().value, dal.kernel_fc1().bias().value)),
                               dal.kernel_fc2().weight().value, dal.kernel_fc2().bias().value);
    auto att = naive_fc(naive_relu(naive_fc(ev, dal.attention_fc1().weight().value, dal.attention_fc1().bias().value)),
                        dal.attention_fc2().weight().value, dal.attention_fc2().bias().value);
    for (auto& a : att) a = 1.0 / (1.0 + std::exp(-a));
    Tensor dw(1, C, feat.h(), feat.w());
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < feat.h(); ++i)
        for (int j = 0; j < feat.w(); ++j) {
          double s = 0;
          for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
              s += kern[static_cast<std::size_t>((c * k + a) * k + b)] *
                   feat.at(n, c, sym(i + a - k / 2, feat.h()), sym(j + b - k / 2, feat.w()));
          dw.at(0, c, i, j) = s;
        }
    const Tensor a = naive_conv(dw, dal.mix().weight().value, dal.mix().bias().value);
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < feat.h(); ++i)
        for (int j = 0; j < feat.w(); ++j)
          out.at(n, c, i, j) = a.at(0, c, i, j) + att[static_cast<std::size_t>(c)] * feat.at(n, c, i, j);
  }
  return out;
}

Tensor relu_t(Tensor t) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::max(t[i], 0.0);
  return t;
}

void zero(Param& p) { p.value.fill(0.0); }

NetworkConfig desk_config(Conditioning mode = Conditioning::altitude) {
  NetworkConfig c;
  c.hidden_layers = 3;
  c.channels = 8;
  c.embedding_dim = 8;
  c.conditioning = mode;
  return c;
}

Image rgb_texture(int h, int w, std::uint64_t seed) { return test::texture_image(3, h, w, seed); }

}  // namespace

TEST(AltitudeCode, NormalizesByEighty) {
  EXPECT_EQ(altitude_code(80.0, Conditioning::altitude), 1.0);
  EXPECT_EQ(altitude_code(10.0, Conditioning::altitude), 0.125);
  EXPECT_EQ(altitude_code(140.0, Conditioning::none), 1.0);
  EXPECT_THROW(altitude_code(0.0, Conditioning::altitude), InvalidInput);
  EXPECT_THROW(altitude_code(-5.0, Conditioning::altitude), InvalidInput);
  EXPECT_NO_THROW(altitude_code(-5.0, Conditioning::none));
}

TEST(AltitudeEncoder, ZeroSecondLayerGivesZeroEmbedding) {
  ParamStore store;
  std::mt19937_64 rng(1);
  AltitudeEncoder enc(store, "enc", 16, rng);
  zero(enc.fc2().weight());
  zero(enc.fc2().bias());
  for (double alt : {10.0, 50.0, 140.0}) {
    const Tensor e = enc.forward(Tensor(1, 1, 1, 1, alt / kAltitudeNorm));
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_EQ(e[i], 0.0);
  }
}

TEST(AltitudeEncoder, MatchesLoopOracle) {
  ParamStore store;
  std::mt19937_64 rng(2);
  AltitudeEncoder enc(store, "enc", 16, rng);
  const Tensor e = enc.forward(Tensor(1, 1, 1, 1, 0.375));
  const auto ref = naive_fc(naive_relu(naive_fc({0.375}, enc.fc1().weight().value, enc.fc1().bias().value)),
                            enc.fc2().weight().value, enc.fc2().bias().value);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(e[i], ref[i], 1e-12);
}

TEST(Dal, ZeroAttentionLogitsHalveFeatures) {
  ParamStore store;
  std::mt19937_64 rng(3);
  Dal dal(store, "dal", 4, 8, 3, rng);
  zero(dal.mix().weight());
  zero(dal.mix().bias());
  zero(dal.attention_fc2().weight());
  zero(dal.attention_fc2().bias());
  const Tensor feat = random_tensor(2, 4, 6, 5, 11);
  const Tensor y = dal.forward(feat, random_tensor(2, 8, 1, 1, 12));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], feat[i] / 2, 1e-15);
}

TEST(Dal, DeltaKernelAndIdentityMixPassFeaturesThrough) {
  ParamStore store;
  std::mt19937_64 rng(4);
  const int C = 4, k = 3;
  Dal dal(store, "dal", C, 8, k, rng);
  zero(dal.kernel_fc2().weight());
  Tensor& kb = dal.kernel_fc2().bias().value;
  kb.fill(0.0);
  for (int c = 0; c < C; ++c) kb[static_cast<std::size_t>(c * k * k + 4)] = 1.0;
  Tensor& mw = dal.mix().weight().value;
  mw.fill(0.0);
  for (int c = 0; c < C; ++c) mw.at(c, c, 0, 0) = 1.0;
  zero(dal.mix().bias());
  // push branch B to zero via a very negative attention logit
  zero(dal.attention_fc2().weight());
  dal.attention_fc2().bias().value.fill(-1000.0);
  const Tensor feat = random_tensor(1, C, 7, 6, 13);
  const Tensor y = dal.forward(feat, random_tensor(1, 8, 1, 1, 14));
  EXPECT_LT(max_diff(y, feat), 1e-12);
}

TEST(Dal, MatchesLoopOracle) {
  ParamStore store;
  std::mt19937_64 rng(5);
  Dal dal(store, "dal", 128, 64, 3, rng);
  // random kernels, not just the near-delta initialization
  dal.kernel_fc2().weight().value = random_tensor(128 * 9, 64, 1, 1, 15, 0.2);
  const Tensor feat = random_tensor(1, 128, 8, 8, 16);
  const Tensor e = random_tensor(1, 64, 1, 1, 17);
  EXPECT_LT(max_diff(dal.forward(feat, e), naive_dal(dal, feat, e)), 1e-6);
}

TEST(Dal, ChannelMismatchThrows) {
  ParamStore store;
  std::mt19937_64 rng(6);
  Dal dal(store, "dal", 4, 8, 3, rng);
  EXPECT_THROW(dal.forward(random_tensor(1, 5, 4, 4, 1), random_tensor(1, 8, 1, 1, 2)), InvalidInput);
}

TEST(Dab, ZeroConvsGiveZero) {
  ParamStore store;
  std::mt19937_64 rng(7);
  Dab dab(store, "dab", 4, 8, 3, rng);
  zero(dab.conv1().weight());
  zero(dab.conv1().bias());
  zero(dab.conv2().weight());
  zero(dab.conv2().bias());
  const Tensor y = dab.forward(random_tensor(1, 4, 6, 6, 18), random_tensor(1, 8, 1, 1, 19));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], 0.0);
}

TEST(Dab, PreservesShape) {
  ParamStore store;
  std::mt19937_64 rng(8);
  Dab dab(store, "dab", 128, 64, 3, rng);
  const Tensor y = dab.forward(random_tensor(1, 128, 16, 16, 20), random_tensor(1, 64, 1, 1, 21));
  EXPECT_EQ(y.n(), 1);
  EXPECT_EQ(y.c(), 128);
  EXPECT_EQ(y.h(), 16);
  EXPECT_EQ(y.w(), 16);
}

TEST(Dab, MatchesLoopOracle) {
  ParamStore store;
  std::mt19937_64 rng(9);
  Dab dab(store, "dab", 16, 64, 3, rng);
  const Tensor feat = random_tensor(1, 16, 8, 8, 22);
  const Tensor e = random_tensor(1, 64, 1, 1, 23);
  const Tensor z1 = naive_conv(naive_dal(dab.dal1(), feat, e), dab.conv1().weight().value, dab.conv1().bias().value);
  const Tensor z2 =
      naive_conv(naive_dal(dab.dal2(), relu_t(z1), e), dab.conv2().weight().value, dab.conv2().bias().value);
  EXPECT_LT(max_diff(dab.forward(feat, e), relu_t(z2)), 1e-6);
}

TEST(Network, ShapeLaw) {
  EXPECT_EQ(scaled_length(180, 50, 9), 1000);
  EXPECT_EQ(scaled_length(36, 50, 9), 200);
  EXPECT_EQ(scaled_length(18, 50, 9), 100);
  for (Head head : {Head::pre_upsample, Head::upsample}) {
    NetworkConfig c = desk_config();
    c.head = head;
    AaFcnn net(c, 1);
    const Image out = net.infer(rgb_texture(36, 18, 3), 30.0);
    EXPECT_EQ(out.height(), 200);
    EXPECT_EQ(out.width(), 100);
  }
}

TEST(Network, DefaultsFollowTheArchitecture) {
  NetworkConfig c;
  EXPECT_EQ(c.hidden_layers, 8);
  EXPECT_EQ(c.channels, 128);
  EXPECT_EQ(c.embedding_dim, 64);
  EXPECT_EQ(c.dal_kernel, 3);
  AaFcnn net(c, 0);
  EXPECT_EQ(net.dals().size(), 7u);
}

TEST(Network, ZeroResidualReproducesBicubic) {
  AaFcnn net(desk_config(), 2);
  const Image lr = rgb_texture(18, 27, 4);
  const Image out = net.infer(lr, 50.0);
  const Image bic = resize_bicubic(lr, 100, 150);
  ASSERT_EQ(out.size(), bic.size());
  Image clamped = bic;
  clamped.clamp01();
  EXPECT_EQ(test::max_abs_diff(out, clamped), 0.0);
  const Image gt = rgb_texture(100, 150, 5);
  EXPECT_EQ(metrics::psnr_y(out, gt).db, metrics::psnr_y(clamped, gt).db);
}

TEST(Network, OutputsAreClamped) {
  AaFcnn net(desk_config(), 3);
  net.params().get("conv_out.bias").value.fill(5.0);
  const Image out = net.infer(rgb_texture(18, 18, 6), 20.0);
  for (float v : out.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Network, FrozenModeIgnoresAltitude) {
  AaFcnn net(desk_config(Conditioning::none), 4);
  net.params().get("conv_out.weight").value = random_tensor(3, 8, 3, 3, 24, 0.1);
  const Image lr = rgb_texture(18, 18, 7);
  const Image a = net.infer(lr, 10.0);
  for (double alt : {20.0, 70.0, 140.0, -3.0}) {
    const Image b = net.infer(lr, alt);
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  }
  const Image c = net.infer_with_code(lr, 1.0);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));
}

TEST(Network, AltitudeModeRespondsToAltitude) {
  AaFcnn net(desk_config(), 5);
  net.params().get("conv_out.weight").value = random_tensor(3, 8, 3, 3, 25, 0.1);
  const Image lr = rgb_texture(18, 18, 8);
  EXPECT_GT(test::max_abs_diff(net.infer(lr, 10.0), net.infer(lr, 140.0)), 0.0);
}

TEST(Network, RejectsGrayInput) {
  AaFcnn net(desk_config(), 6);
  EXPECT_THROW(net.infer(test::texture_image(1, 18, 18, 1), 10.0), InvalidInput);
}

TEST(UpsampleHead, ShapeAndDeltaFootprint) {
  ParamStore store;
  std::mt19937_64 rng(10);
  UpsampleHead head(store, "up", 128, rng);
  const Tensor y = head.forward(random_tensor(1, 128, 18, 18, 26), 100, 100);
  EXPECT_EQ(y.c(), 128);
  EXPECT_EQ(y.h(), 100);
  EXPECT_EQ(y.w(), 100);

  ParamStore s1;
  UpsampleHead one(s1, "up", 1, rng);
  Tensor& w = one.conv().weight().value;
  w.fill(0.0);
  w.at(0, 0, 1, 1) = 1.0;
  zero(one.conv().bias());
  Tensor delta(1, 1, 9, 9);
  delta.at(0, 0, 4, 4) = 1.0;
  const Tensor out = one.forward(delta, 50, 50);
  const Tensor up = upsample_bicubic_forward(delta, 50, 50);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_NEAR(out[i], up[i] >= 0 ? up[i] : 0.01 * up[i], 1e-15);
  }
  // footprint is confined near the center
  EXPECT_EQ(out.at(0, 0, 0, 0), 0.0);
  EXPECT_GT(out.at(0, 0, 25, 25), 0.5);
}

TEST(Activations, LeakyReluSlope) {
  Tensor x(1, 1, 1, 3);
  x[0] = -2.0;
  x[1] = 0.0;
  x[2] = 3.0;
  const Tensor y = leaky_relu_forward(x);
  EXPECT_DOUBLE_EQ(y[0], -0.02);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(y[2], 3.0);
  Tensor dy(1, 1, 1, 3, 1.0);
  const Tensor r = relu_backward(x, dy);
  EXPECT_EQ(r[1], 0.0);
}

TEST(Loss, L1Cases) {
  const Tensor a = random_tensor(2, 3, 4, 5, 30);
  EXPECT_EQ(l1_loss(a, a), 0.0);
  Tensor b = a;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += 0.5;
  EXPECT_NEAR(l1_loss(b, a), 0.5, 1e-15);

  const Tensor c = random_tensor(2, 3, 4, 5, 31);
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - c[i]);
  EXPECT_NEAR(l1_loss(a, c), s / static_cast<double>(a.size()), 1e-15);
  const Tensor g = l1_loss_backward(a, c);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double sg = a[i] > c[i] ? 1.0 : (a[i] < c[i] ? -1.0 : 0.0);
    EXPECT_EQ(g[i], sg / static_cast<double>(a.size()));
  }
  const Tensor z = l1_loss_backward(a, a);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(z[i], 0.0);
  EXPECT_THROW(l1_loss(a, random_tensor(1, 3, 4, 5, 1)), InvalidInput);
}

TEST(Adam, ZeroGradientKeepsParameters) {
  ParamStore store;
  const Tensor v = random_tensor(2, 3, 1, 1, 32);
  store.add("p", v);
  adam_step(store);
  EXPECT_EQ(store.get("p").value, v);
  EXPECT_EQ(store.step, 1);
}

TEST(Adam, SingleStepMatchesFormula) {
  ParamStore store;
  const Tensor v = random_tensor(1, 6, 1, 1, 33);
  const Tensor g = random_tensor(1, 6, 1, 1, 34, 0.01);
  store.add("p", v);
  AdamParams p;
  p.lr = 1e-3;
  adam_step(store, {{"p", g}}, p);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = (1 - p.beta1) * g[i], s = (1 - p.beta2) * g[i] * g[i];
    const double mhat = m / (1 - p.beta1), shat = s / (1 - p.beta2);
    EXPECT_NEAR(store.get("p").value[i], v[i] - p.lr * mhat / (std::sqrt(shat) + p.eps), 1e-15);
  }
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  ParamStore store;
  store.add("p", Tensor(1, 2, 1, 1));
  Tensor g(1, 2, 1, 1);
  g[0] = 3.0;
  g[1] = -0.02;
  AdamParams p;
  p.lr = 1e-3;
  Tensor prev = store.get("p").value;
  for (int i = 0; i < 5000; ++i) {
    prev = store.get("p").value;
    adam_step(store, {{"p", g}}, p);
  }
  const Tensor& now = store.get("p").value;
  EXPECT_NEAR(now[0] - prev[0], -p.lr, 1e-9);
  EXPECT_NEAR(now[1] - prev[1], p.lr, 1e-6);
  EXPECT_EQ(store.step, 5000);
}

TEST(Adam, ShapeMismatchThrows) {
  ParamStore store;
  store.add("p", Tensor(1, 2, 1, 1));
  EXPECT_THROW(adam_step(store, {{"p", Tensor(1, 3, 1, 1)}}), InvalidInput);
}

TEST(GradCheck, LinearConvIsExact) {
  Tensor x = random_tensor(1, 2, 5, 5, 40);
  Tensor w = random_tensor(3, 2, 3, 3, 41);
  Tensor b = random_tensor(1, 3, 1, 1, 42);
  const Tensor r = random_tensor(1, 3, 5, 5, 43);
  Tensor dx, dw, db;
  GradCheckOptions o;
  o.tolerance = 1e-8;
  const auto rep = gradient_check(
      "conv", {{"x", &x.vec(), &dx.vec()}, {"w", &w.vec(), &dw.vec()}, {"b", &b.vec(), &db.vec()}},
      [&] {
        const Tensor y = conv2d_forward(x, w, b);
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
        return s;
      },
      [&] {
        dw = Tensor(3, 2, 3, 3);
        db = Tensor(1, 3, 1, 1);
        dx = conv2d_backward(x, w, r, dw, db);
      },
      nullptr, o);
  EXPECT_TRUE(rep.passed()) << rep.summary();
}

TEST(GradCheck, ReportsTheFailingLayer) {
  std::vector<double> v{0.3, -0.2};
  std::vector<double> wrong{1.0, 1.0};
  const auto rep = gradient_check(
      "broken", {{"v", &v, &wrong}}, [&] { return v[0] * v[0] + v[1]; }, [] {}, nullptr, {});
  EXPECT_FALSE(rep.passed());
  try {
    require_passed(rep);
    FAIL();
  } catch (const GradCheckFailure& e) {
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
  }
}

TEST(GradCheck, EveryLayerPasses) {
  const auto reports = check_layers();
  EXPECT_GE(reports.size(), 14u);
  for (const auto& r : reports) EXPECT_TRUE(r.passed()) << r.summary();
}

TEST(GradCheck, FullNetworkAtDeskScale) {
  NetworkConfig c = desk_config();
  const auto rep = check_network(c, 8);
  EXPECT_EQ(rep.checked + rep.skipped, 200);
  EXPECT_LE(rep.skipped, 10);
  EXPECT_TRUE(rep.passed()) << rep.summary();
}

namespace {

std::vector<SrSample> blur_samples(int count, std::uint64_t seed, const std::vector<double>& altitudes) {
  std::vector<SrSample> out;
  for (int i = 0; i < count; ++i) {
    SrSample s;
    s.hr = rgb_texture(100, 100, seed + static_cast<std::uint64_t>(i));
    s.altitude_m = altitudes[static_cast<std::size_t>(i) % altitudes.size()];
    s.lr = resize_bicubic(gaussian_blur(s.hr, 0.5 + s.altitude_m / 40.0), 18, 18);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST(Train, SinglePairLossNonIncreasing) {
  AaFcnn net(desk_config(), 7);
  const auto data = blur_samples(1, 50, {30.0});
  TrainConfig tc;
  tc.steps = 200;
  tc.batch = 1;
  tc.val_every = 1000;
  tc.seed = 3;
  const auto res = train(net, data, {}, tc);
  ASSERT_EQ(res.losses.size(), 200u);
  for (std::size_t i = 1; i < res.losses.size(); ++i) EXPECT_LE(res.losses[i], res.losses[i - 1]) << "step " << i;
  EXPECT_LT(res.losses.back(), res.losses.front());
}

TEST(Train, SameSeedSameParameters) {
  const auto data = blur_samples(4, 60, {10.0, 80.0});
  TrainConfig tc;
  tc.steps = 20;
  tc.batch = 2;
  tc.crop = 50;
  tc.seed = 9;
  AaFcnn a(desk_config(), 11), b(desk_config(), 11);
  train(a, data, {}, tc);
  train(b, data, {}, tc);
  for (const auto& [name, p] : a.params().all()) EXPECT_EQ(p.value, b.params().get(name).value) << name;
}

TEST(Train, EmptyDatasetThrows) {
  AaFcnn net(desk_config(), 12);
  EXPECT_THROW(train(net, {}, {}, TrainConfig{}), InvalidInput);
}

TEST(Train, ValidationRowsPerAltitude) {
  const auto data = blur_samples(4, 70, {10.0, 80.0});
  TrainConfig tc;
  tc.steps = 10;
  tc.batch = 2;
  tc.val_every = 5;
  AaFcnn net(desk_config(), 13);
  std::ostringstream csv;
  const auto res = train(net, data, data, tc, &csv);
  ASSERT_EQ(res.validation.size(), 2u);
  EXPECT_EQ(res.validation[1].step, 10);
  EXPECT_EQ(res.validation[1].psnr_by_altitude.size(), 2u);
  EXPECT_NE(csv.str().find("step"), std::string::npos);
}

TEST(Train, FreshNetworkMatchesBicubicBaseline) {
  const auto data = blur_samples(4, 80, {10.0, 50.0});
  AaFcnn net(desk_config(), 14);
  const auto a = evaluate_psnr(net, data);
  const auto b = bicubic_psnr(data, 50, 9);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [alt, v] : a) EXPECT_EQ(v, b.at(alt));
}

TEST(Checkpoint, RoundTripAndMismatch) {
  test::TempDir dir("ckpt");
  AaFcnn net(desk_config(), 15);
  net.params().get("conv_out.weight").value = random_tensor(3, 8, 3, 3, 44, 0.1);
  net.params().step = 17;
  const auto path = dir.path() / "net.ckpt";
  save_checkpoint(path, net);

  auto loaded = load_network(path);
  EXPECT_EQ(loaded->config().serialize(), net.config().serialize());
  EXPECT_EQ(loaded->params().step, 17);
  const Image lr = rgb_texture(18, 18, 9);
  const Image a = net.infer(lr, 40.0), b = loaded->infer(lr, 40.0);
  // float32 storage
  EXPECT_LT(test::max_abs_diff(a, b), 1e-6);

  AaFcnn other(desk_config(Conditioning::none), 15);
  EXPECT_THROW(load_checkpoint(path, other), ConfigMismatch);
  EXPECT_EQ(parse_network_config(net.config().serialize()).serialize(), net.config().serialize());
}

TEST(Checkpoint, MalformedFileThrows) {
  test::TempDir dir("badckpt");
  const auto path = dir.path() / "bad.ckpt";
  std::ofstream(path) << "not a checkpoint";
  EXPECT_THROW(read_checkpoint_config(path), Error);
}
