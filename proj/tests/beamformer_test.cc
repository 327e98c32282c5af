// tests/beamformer_test.cc

// Copyright 2026 The BeamSpeech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>

#include "beamspeech/beamformer.h"
#include "beamspeech/signal.h"
#include "doctest.h"
#include "test_util.h"

using namespace beamspeech;
using namespace beamspeech::testing;

namespace {

ComplexTensor RandomComplex(const Shape &s, std::mt19937_64 &rng, double scale = 1.0) {
  return {RandomTensor(s, rng, -scale, scale), RandomTensor(s, rng, -scale, scale)};
}

cd At(const ComplexTensor &x, std::size_t i) { return {x.re[i], x.im[i]}; }

// Random Hermitian positive definite [C,C]: B B^H + shift I.
CMatrix RandomHpd(std::size_t C, std::mt19937_64 &rng, double shift) {
  std::normal_distribution<double> nd;
  CMatrix b(C, std::vector<cd>(C));
  for (auto &row : b)
    for (auto &v : row) v = {nd(rng), nd(rng)};
  CMatrix a(C, std::vector<cd>(C));
  for (std::size_t i = 0; i < C; ++i)
    for (std::size_t j = 0; j < C; ++j) {
      for (std::size_t k = 0; k < C; ++k) a[i][j] += b[i][k] * std::conj(b[j][k]);
      if (i == j) a[i][j] += shift;
    }
  return a;
}

// Packs per-frequency matrices into a [F,C,C] ComplexTensor.
ComplexTensor Pack(const std::vector<CMatrix> &ms) {
  const std::size_t F = ms.size(), C = ms[0].size();
  ComplexTensor out(Shape{F, C, C});
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t i = 0; i < C; ++i)
      for (std::size_t j = 0; j < C; ++j) {
        out.re.at(f, i, j) = ms[f][i][j].real();
        out.im.at(f, i, j) = ms[f][i][j].imag();
      }
  return out;
}

// g = (inv(N + load I) S / tr(.)) u by Gauss-Jordan on std::complex.
std::vector<cd> MvdrOracle(CMatrix n, const CMatrix &s, const std::vector<double> &u,
                           const MvdrOptions &opts) {
  const std::size_t C = n.size();
  double tr_n = 0.0;
  for (std::size_t c = 0; c < C; ++c) tr_n += n[c][c].real();
  const double load = opts.load_scale * tr_n / C + opts.load_floor;
  for (std::size_t c = 0; c < C; ++c) n[c][c] += load;
  CMatrix m = CMatMulOracle(CInverseOracle(n), s);
  cd tr = 0.0;
  for (std::size_t c = 0; c < C; ++c) tr += m[c][c];
  std::vector<cd> g(C);
  for (std::size_t i = 0; i < C; ++i)
    for (std::size_t j = 0; j < C; ++j) g[i] += m[i][j] / tr * u[j];
  return g;
}

BeamformerConfig TinyConfig(BeamformerVariant v, std::size_t F, std::size_t C = 2) {
  BeamformerConfig cfg;
  cfg.variant = v;
  cfg.num_bins = F;
  cfg.mask_layers = 1;
  cfg.mask_cells = 3;
  cfg.mask_proj = 3;
  cfg.ref_dim = 3;
  cfg.filter_layers = 1;
  cfg.filter_cells = 3;
  cfg.filter_proj = 3;
  cfg.filter_channels = C;
  return cfg;
}

ComplexTensor PermuteChannels(const ComplexTensor &x, const std::vector<std::size_t> &perm) {
  const std::size_t T = x.re.dim(0), F = x.re.dim(1), C = x.re.dim(2);
  ComplexTensor out(x.shape());
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t c = 0; c < C; ++c) {
        out.re.at(t, f, c) = x.re.at(t, f, perm[c]);
        out.im.at(t, f, c) = x.im.at(t, f, perm[c]);
      }
  return out;
}

}  // namespace

TEST_CASE("variant names") {
  for (auto v : {BeamformerVariant::kNoisy, BeamformerVariant::kFilterNet,
                 BeamformerVariant::kMaskMvdr})
    CHECK(ParseVariant(VariantName(v)) == v);
  CHECK_THROWS(ParseVariant("delay_and_sum"));
}

TEST_CASE("filter_and_sum") {
  std::mt19937_64 rng(1);
  Tape tape;
  SUBCASE("C=1, g=1 is the identity") {
    auto x = RandomComplex({4, 5, 1}, rng);
    ComplexTensor g(Shape{5, 1});
    g.re.Fill(1.0);
    auto y = FilterAndSum(ConstantC(tape, x), ConstantC(tape, g)).value();
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(y.re[i] == x.re[i]);
      CHECK(y.im[i] == x.im[i]);
    }
  }
  SUBCASE("one-hot selects a channel") {
    auto x = RandomComplex({3, 4, 3}, rng);
    ComplexTensor g(Shape{3, 4, 3});
    for (std::size_t i = 0; i < 12; ++i) g.re[i * 3 + 2] = 1.0;
    auto y = FilterAndSum(ConstantC(tape, x), ConstantC(tape, g)).value();
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(y.re[i] == x.re[i * 3 + 2]);
      CHECK(y.im[i] == x.im[i * 3 + 2]);
    }
  }
  SUBCASE("random C=3 matches per-bin inner product") {
    auto x = RandomComplex({4, 5, 3}, rng);
    auto gv = RandomComplex({4, 5, 3}, rng);
    auto gi = RandomComplex({5, 3}, rng);
    auto yv = FilterAndSum(ConstantC(tape, x), ConstantC(tape, gv)).value();
    auto yi = FilterAndSum(ConstantC(tape, x), ConstantC(tape, gi)).value();
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t f = 0; f < 5; ++f) {
        cd accv = 0, acci = 0;
        for (std::size_t c = 0; c < 3; ++c) {
          accv += std::conj(At(gv, (t * 5 + f) * 3 + c)) * At(x, (t * 5 + f) * 3 + c);
          acci += std::conj(At(gi, f * 3 + c)) * At(x, (t * 5 + f) * 3 + c);
        }
        CHECK(std::abs(At(yv, t * 5 + f) - accv) < 1e-12);
        CHECK(std::abs(At(yi, t * 5 + f) - acci) < 1e-12);
      }
  }
  SUBCASE("channel mismatch") {
    CHECK_THROWS_AS(FilterAndSum(ConstantC(tape, RandomComplex({2, 3, 2}, rng)),
                                 ConstantC(tape, RandomComplex({3, 3}, rng))),
                    ShapeError);
  }
}

TEST_CASE("filter_net") {
  std::mt19937_64 rng(2);
  const std::size_t T = 4, F = 3, C = 2;
  auto cfg = TinyConfig(BeamformerVariant::kFilterNet, F, C);
  ParameterStore store;
  RegisterBeamformer(store, cfg);
  auto x = RandomComplex({T, F, C}, rng);
  SUBCASE("zero weights give zero filters and zero output") {
    Tape tape;
    ParamScope ps(tape, store);
    auto r = Enhance(ps, cfg, ConstantC(tape, x));
    for (double v : r.filter.re.value().vec()) CHECK(v == 0.0);
    for (double v : r.enhanced.re.value().vec()) CHECK(v == 0.0);
    for (double v : r.enhanced.im.value().vec()) CHECK(v == 0.0);
  }
  SUBCASE("bounded and matches the unrolled oracle") {
    store.InitUniform(0.9, 3);
    Tape tape;
    ParamScope ps(tape, store);
    auto g = FilterNetForward(ps, cfg, ConstantC(tape, x)).value();
    Seq feats(T);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < F * C; ++i) feats[t].push_back(x.re[t * F * C + i]);
      for (std::size_t i = 0; i < F * C; ++i) feats[t].push_back(x.im[t * F * C + i]);
    }
    auto z = ScalarBlstmStack(store, "bf/filter", 1, feats);
    for (std::size_t c = 0; c < C; ++c) {
      auto re = ScalarLinear(store, "bf/filter/re" + std::to_string(c), z);
      auto im = ScalarLinear(store, "bf/filter/im" + std::to_string(c), z);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f) {
          CHECK(std::abs(g.re.at(t, f, c) - std::tanh(re[t][f])) < 1e-10);
          CHECK(std::abs(g.im.at(t, f, c) - std::tanh(im[t][f])) < 1e-10);
        }
    }
    for (double v : g.re.vec()) CHECK(std::abs(v) < 1.0);
    for (double v : g.im.vec()) CHECK(std::abs(v) < 1.0);
  }
  SUBCASE("rejects a different channel count") {
    Tape tape;
    ParamScope ps(tape, store);
    for (std::size_t bad : {1, 3}) {
      auto y = RandomComplex({T, F, bad}, rng);
      CHECK_THROWS_AS(FilterNetForward(ps, cfg, ConstantC(tape, y)), ShapeError);
    }
  }
}

TEST_CASE("mask_net and average_masks") {
  std::mt19937_64 rng(4);
  const std::size_t T = 5, F = 3, C = 3;
  auto cfg = TinyConfig(BeamformerVariant::kMaskMvdr, F);
  ParameterStore store;
  RegisterBeamformer(store, cfg);
  store.InitUniform(0.8, 5);
  auto x = RandomComplex({T, F, C}, rng);
  SUBCASE("zero output layer gives 0.5 masks") {
    for (const char *p : {"bf/mask_s/out/W", "bf/mask_s/out/b", "bf/mask_n/out/W", "bf/mask_n/out/b"})
      store.Mutable(p).Fill(0.0);
    Tape tape;
    ParamScope ps(tape, store);
    auto m = MaskNetForward(ps, cfg, ConstantC(tape, x));
    for (double v : m.speech_mask.value().vec()) CHECK(v == 0.5);
    for (double v : m.noise_mask.value().vec()) CHECK(v == 0.5);
  }
  SUBCASE("matches the unrolled oracle per channel") {
    Tape tape;
    ParamScope ps(tape, store);
    auto m = MaskNetForward(ps, cfg, ConstantC(tape, x));
    for (std::size_t c = 0; c < C; ++c) {
      Seq feats(T);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t f = 0; f < F; ++f) feats[t].push_back(x.re.at(t, f, c));
        for (std::size_t f = 0; f < F; ++f) feats[t].push_back(x.im.at(t, f, c));
      }
      for (auto [prefix, mask, state] :
           {std::tuple{"bf/mask_s", m.speech_mask, m.speech_state},
            std::tuple{"bf/mask_n", m.noise_mask, m.noise_state}}) {
        auto z = ScalarBlstmStack(store, prefix, 1, feats);
        auto logits = ScalarLinear(store, std::string(prefix) + "/out", z);
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t f = 0; f < F; ++f)
            CHECK(std::abs(mask.value().at(t, c, f) - Sig(logits[t][f])) < 1e-10);
          for (std::size_t d = 0; d < cfg.mask_proj; ++d)
            CHECK(std::abs(state.value().at(t, c, d) - z[t][d]) < 1e-10);
        }
      }
    }
  }
  SUBCASE("channel permutation permutes outputs") {
    std::vector<std::size_t> perm = {2, 0, 1};
    Tape tape;
    ParamScope ps(tape, store);
    auto a = MaskNetForward(ps, cfg, ConstantC(tape, x));
    auto b = MaskNetForward(ps, cfg, ConstantC(tape, PermuteChannels(x, perm)));
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t f = 0; f < F; ++f)
          CHECK(std::abs(b.speech_mask.value().at(t, c, f) -
                         a.speech_mask.value().at(t, perm[c], f)) < 1e-12);
  }
  SUBCASE("average_masks") {
    Tape tape;
    Tensor same({2, 3, 2});
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t c = 0; c < 3; ++c) {
        same.at(t, c, 0) = 0.25 * (t + 1);
        same.at(t, c, 1) = 0.1;
      }
    auto avg = AverageMasks(tape.Constant(same)).value();
    CHECK(avg.at(0, 0) == doctest::Approx(0.25));
    CHECK(avg.at(1, 0) == doctest::Approx(0.5));
    CHECK(avg.at(1, 1) == doctest::Approx(0.1));
    auto half = AverageMasks(tape.Constant(Tensor({1, 2, 1}, {0.0, 1.0}))).value();
    CHECK(half[0] == 0.5);
    auto r = RandomTensor({4, 4, 6}, rng, 0.0, 1.0);
    auto got = AverageMasks(tape.Constant(r)).value();
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t f = 0; f < 6; ++f) {
        double s = 0;
        for (std::size_t c = 0; c < 4; ++c) s += r.at(t, c, f);
        CHECK(std::abs(got.at(t, f) - s / 4) < 1e-15);
        CHECK(got.at(t, f) >= 0.0);
        CHECK(got.at(t, f) <= 1.0);
      }
  }
}

TEST_CASE("estimate_psd") {
  std::mt19937_64 rng(6);
  const std::size_t T = 6, F = 4, C = 3;
  auto x = RandomComplex({T, F, C}, rng);
  Tape tape;
  auto oracle = [&](const Tensor &m) {
    std::vector<CMatrix> out(F, CMatrix(C, std::vector<cd>(C)));
    for (std::size_t f = 0; f < F; ++f) {
      double mass = 0;
      for (std::size_t t = 0; t < T; ++t) {
        mass += m.at(t, f);
        for (std::size_t i = 0; i < C; ++i)
          for (std::size_t j = 0; j < C; ++j)
            out[f][i][j] += m.at(t, f) * At(x, (t * F + f) * C + i) *
                            std::conj(At(x, (t * F + f) * C + j));
      }
      for (auto &row : out[f])
        for (auto &v : row) v /= mass + kPsdEpsilon;
    }
    return out;
  };
  auto check = [&](const Tensor &m, double tol) {
    auto got = EstimatePsd(ConstantC(tape, x), tape.Constant(m)).value();
    auto want = oracle(m);
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t i = 0; i < C; ++i)
        for (std::size_t j = 0; j < C; ++j) {
          cd g(got.re.at(f, i, j), got.im.at(f, i, j));
          CHECK(std::abs(g - want[f][i][j]) < tol);
          cd gt(got.re.at(f, j, i), got.im.at(f, j, i));
          CHECK(std::abs(g - std::conj(gt)) < 1e-10);
          if (i == j) CHECK(g.real() >= 0.0);
        }
    return got;
  };
  SUBCASE("unit mask is the sample covariance") { check(Tensor({T, F}, 1.0), 1e-12); }
  SUBCASE("one-hot mask is the outer product at t0") {
    Tensor m({T, F}, 0.0);
    for (std::size_t f = 0; f < F; ++f) m.at(2, f) = 1.0;
    auto got = check(m, 1e-12);
    for (std::size_t f = 0; f < F; ++f) {
      cd x0 = At(x, (2 * F + f) * C + 0), x1 = At(x, (2 * F + f) * C + 1);
      cd want = x0 * std::conj(x1);
      CHECK(std::abs(cd(got.re.at(f, 0, 1), got.im.at(f, 0, 1)) - want) < 1e-9);
    }
  }
  SUBCASE("random mask") { check(RandomTensor({T, F}, rng, 0.0, 1.0), 1e-12); }
  SUBCASE("zero mass is counted, not fatal") {
    ResetPsdZeroMassCount();
    Tensor m({T, F}, 1.0);
    for (std::size_t t = 0; t < T; ++t) m.at(t, 1) = 0.0;
    auto got = EstimatePsd(ConstantC(tape, x), tape.Constant(m)).value();
    CHECK(PsdZeroMassCount() == 1);
    CHECK(got.re.AllFinite());
    CHECK(got.re.at(1, 0, 0) == 0.0);
  }
  SUBCASE("gradient") {
    auto err = GradientErrors(
        [&](Tape &t, const std::vector<Var> &v) {
          CVar phi = EstimatePsd({v[0], v[1]}, ad::Sigmoid(v[2]));
          return ad::Sum(ad::Square(phi.re)) + ad::Sum(phi.im * t.Constant(Tensor({F, C, C}, 0.3)));
        },
        {x.re, x.im, RandomTensor({T, F}, rng)});
    for (double e : err) CHECK(e < 1e-6);
  }
}

TEST_CASE("mvdr_filter") {
  std::mt19937_64 rng(7);
  Tape tape;
  SUBCASE("C=1 gives g=1") {
    ComplexTensor s(Shape{3, 1, 1}), n(Shape{3, 1, 1});
    for (std::size_t f = 0; f < 3; ++f) s.re[f] = n.re[f] = 0.5 + f;
    auto g = MvdrFilter(ConstantC(tape, s), ConstantC(tape, n), tape.Constant(Tensor::Vector({1.0})))
                 .value();
    for (std::size_t f = 0; f < 3; ++f) {
      CHECK(g.re[f] == 1.0);
      CHECK(g.im[f] == 0.0);
    }
  }
  SUBCASE("identity noise and a rank-one diagonal direction") {
    const std::size_t C = 3, k = 1;
    ComplexTensor n(Shape{1, C, C}), s(Shape{1, C, C});
    for (std::size_t c = 0; c < C; ++c) n.re.at(0, c, c) = 1.0;
    s.re.at(0, k, k) = 2.5;
    Tensor u({C}, 0.0);
    u[k] = 1.0;
    auto g = MvdrFilter(ConstantC(tape, s), ConstantC(tape, n), tape.Constant(u)).value();
    for (std::size_t c = 0; c < C; ++c) {
      CHECK(std::abs(g.re[c] - (c == k ? 1.0 : 0.0)) < 1e-12);
      CHECK(std::abs(g.im[c]) < 1e-12);
    }
  }
  SUBCASE("random instances match the Gauss-Jordan oracle") {
    for (std::size_t C : {2, 3, 4}) {
      for (int trial = 0; trial < 20; ++trial) {
        const std::size_t F = 3;
        std::vector<CMatrix> ns, ss;
        for (std::size_t f = 0; f < F; ++f) {
          ns.push_back(RandomHpd(C, rng, 0.5));
          ss.push_back(RandomHpd(C, rng, 0.0));
        }
        auto u = RandomTensor({C}, rng, 0.0, 1.0);
        double total = std::accumulate(u.vec().begin(), u.vec().end(), 0.0);
        for (auto &v : u.vec()) v /= total;
        auto g = MvdrFilter(ConstantC(tape, Pack(ss)), ConstantC(tape, Pack(ns)), tape.Constant(u))
                     .value();
        for (std::size_t f = 0; f < F; ++f) {
          auto want = MvdrOracle(ns[f], ss[f], u.vec(), {});
          for (std::size_t c = 0; c < C; ++c)
            CHECK(std::abs(cd(g.re.at(f, c), g.im.at(f, c)) - want[c]) < 1e-10);
        }
        // Positive scaling of the speech PSD cancels in the trace.
        auto scaled = Pack(ss);
        for (auto &v : scaled.re.vec()) v *= 37.5;
        for (auto &v : scaled.im.vec()) v *= 37.5;
        auto g2 = MvdrFilter(ConstantC(tape, scaled), ConstantC(tape, Pack(ns)), tape.Constant(u))
                      .value();
        CHECK(MaxAbsDiff(g.re, g2.re) < 1e-10);
        CHECK(MaxAbsDiff(g.im, g2.im) < 1e-10);
      }
    }
  }
  SUBCASE("near-zero trace reports the frequency") {
    std::vector<CMatrix> ns = {RandomHpd(2, rng, 1.0), RandomHpd(2, rng, 1.0)};
    std::vector<CMatrix> ss = {RandomHpd(2, rng, 0.1), CMatrix(2, std::vector<cd>(2))};
    try {
      MvdrFilter(ConstantC(tape, Pack(ss)), ConstantC(tape, Pack(ns)),
                 tape.Constant(Tensor::Vector({1.0, 0.0})));
      FAIL("expected NumericError");
    } catch (const NumericError &e) {
      CHECK(e.index() == 1);
    }
  }
  SUBCASE("singular noise PSD is rescued by the loading floor") {
    ComplexTensor n(Shape{1, 2, 2});
    std::vector<CMatrix> ss = {RandomHpd(2, rng, 0.1)};
    auto g = MvdrFilter(ConstantC(tape, Pack(ss)), ConstantC(tape, n),
                        tape.Constant(Tensor::Vector({0.5, 0.5})))
                 .value();
    CHECK(g.re.AllFinite());
    CHECK(g.im.AllFinite());
  }
  SUBCASE("gradient through inverse, trace and loading") {
    const std::size_t F = 2, C = 3;
    std::vector<CMatrix> ns, ss;
    for (std::size_t f = 0; f < F; ++f) {
      ns.push_back(RandomHpd(C, rng, 1.0));
      ss.push_back(RandomHpd(C, rng, 0.2));
    }
    auto pn = Pack(ns), pss = Pack(ss);
    auto w = RandomComplex({F, C}, rng);
    auto err = GradientErrors(
        [&](Tape &t, const std::vector<Var> &v) {
          CVar g = MvdrFilter({v[0], v[1]}, {v[2], v[3]}, ad::Reshape(ad::Softmax(ad::Reshape(v[4], {1, C})), {C}));
          return ad::Sum(g.re * t.Constant(w.re)) + ad::Sum(ad::Square(g.im));
        },
        {pss.re, pss.im, pn.re, pn.im, RandomTensor({C}, rng)});
    for (double e : err) CHECK(e < 1e-6);
  }
}

TEST_CASE("reference_attention") {
  std::mt19937_64 rng(8);
  const std::size_t T = 4, F = 3, D = 3;
  auto cfg = TinyConfig(BeamformerVariant::kMaskMvdr, F);
  ParameterStore store;
  RegisterBeamformer(store, cfg);
  store.InitUniform(0.7, 9);
  SUBCASE("C=1 bypass") {
    Tape tape;
    ParamScope ps(tape, store);
    auto u = ReferenceAttention(ps, cfg, tape.Constant(RandomTensor({T, 1, D}, rng)),
                                tape.Constant(RandomTensor({T, 1, D}, rng)),
                                ConstantC(tape, RandomComplex({F, 1, 1}, rng)))
                 .value();
    CHECK(u.shape() == Shape{1});
    CHECK(u[0] == 1.0);
  }
  SUBCASE("identical channels give a uniform reference") {
    const std::size_t C = 3;
    Tensor zs({T, C, D}), zn({T, C, D});
    auto a = RandomTensor({T, D}, rng), b = RandomTensor({T, D}, rng);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t d = 0; d < D; ++d) {
          zs.at(t, c, d) = a.at(t, d);
          zn.at(t, c, d) = b.at(t, d);
        }
    ComplexTensor phi(Shape{F, C, C});
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t i = 0; i < C; ++i)
        for (std::size_t j = 0; j < C; ++j) {
          phi.re.at(f, i, j) = 0.3 + f;
          phi.im.at(f, i, j) = 0.0;
        }
    Tape tape;
    ParamScope ps(tape, store);
    auto u = ReferenceAttention(ps, cfg, tape.Constant(zs), tape.Constant(zn), ConstantC(tape, phi))
                 .value();
    for (std::size_t c = 0; c < C; ++c) CHECK(std::abs(u[c] - 1.0 / 3) < 1e-12);
  }
  SUBCASE("matches the direct formula and sharpens with beta") {
    const std::size_t C = 3;
    auto zs = RandomTensor({T, C, D}, rng), zn = RandomTensor({T, C, D}, rng);
    auto phi = RandomComplex({F, C, C}, rng);
    // Direct evaluation.
    const Tensor &vq = store.Get("bf/ref/q/W"), &bq = store.Get("bf/ref/q/b");
    const Tensor &vr = store.Get("bf/ref/r/W"), &v = store.Get("bf/ref/v/W");
    std::vector<double> k(C);
    for (std::size_t c = 0; c < C; ++c) {
      std::vector<double> q(2 * D, 0.0), r(2 * F, 0.0);
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t t = 0; t < T; ++t) {
          q[d] += zs.at(t, c, d) / T;
          q[D + d] += zn.at(t, c, d) / T;
        }
      for (std::size_t f = 0; f < F; ++f)
        for (std::size_t c2 = 0; c2 < C; ++c2) {
          if (c2 == c) continue;
          r[f] += phi.re.at(f, c, c2) / (C - 1);
          r[F + f] += phi.im.at(f, c, c2) / (C - 1);
        }
      for (std::size_t j = 0; j < cfg.ref_dim; ++j) {
        double acc = bq[j];
        for (std::size_t i = 0; i < 2 * D; ++i) acc += q[i] * vq.at(i, j);
        for (std::size_t i = 0; i < 2 * F; ++i) acc += r[i] * vr.at(i, j);
        k[c] += v.at(j, 0) * std::tanh(acc);
      }
    }
    auto softmax = [&](double beta) {
      std::vector<double> e(C);
      double z = 0;
      for (std::size_t c = 0; c < C; ++c) z += (e[c] = std::exp(beta * k[c]));
      for (auto &x : e) x /= z;
      return e;
    };
    for (double beta : {2.0, 0.5}) {
      auto c2 = cfg;
      c2.beta = beta;
      Tape tape;
      ParamScope ps(tape, store);
      auto u = ReferenceAttention(ps, c2, tape.Constant(zs), tape.Constant(zn), ConstantC(tape, phi))
                   .value();
      auto want = softmax(beta);
      double sum = 0;
      for (std::size_t c = 0; c < C; ++c) {
        CHECK(std::abs(u[c] - want[c]) < 1e-12);
        CHECK(u[c] >= 0.0);
        sum += u[c];
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    auto sharp = cfg;
    sharp.beta = 1e4;
    Tape tape;
    ParamScope ps(tape, store);
    auto u = ReferenceAttention(ps, sharp, tape.Constant(zs), tape.Constant(zn), ConstantC(tape, phi))
                 .value();
    const std::size_t best = std::max_element(k.begin(), k.end()) - k.begin();
    CHECK(u[best] > 1.0 - 1e-6);
  }
  SUBCASE("fixed reference") {
    auto fixed = cfg;
    fixed.mask_ref_fixed = true;
    fixed.ref_channel = 1;
    Tape tape;
    ParamScope ps(tape, store);
    auto u = ReferenceAttention(ps, fixed, tape.Constant(RandomTensor({T, 2, D}, rng)),
                                tape.Constant(RandomTensor({T, 2, D}, rng)),
                                ConstantC(tape, RandomComplex({F, 2, 2}, rng)))
                 .value();
    CHECK(u == Tensor::Vector({0.0, 1.0}));
    fixed.ref_channel = 5;
    CHECK_THROWS_AS(ReferenceAttention(ps, fixed, tape.Constant(RandomTensor({T, 2, D}, rng)),
                                       tape.Constant(RandomTensor({T, 2, D}, rng)),
                                       ConstantC(tape, RandomComplex({F, 2, 2}, rng))),
                    ShapeError);
  }
}

TEST_CASE("enhance with mask_mvdr") {
  std::mt19937_64 rng(10);
  const std::size_t T = 6, F = 4;
  auto cfg = TinyConfig(BeamformerVariant::kMaskMvdr, F);
  ParameterStore store;
  RegisterBeamformer(store, cfg);
  store.InitUniform(0.5, 11);
  SUBCASE("C=1 is the identity") {
    auto x = RandomComplex({T, F, 1}, rng);
    Tape tape;
    ParamScope ps(tape, store);
    auto r = Enhance(ps, cfg, ConstantC(tape, x));
    CHECK(MaxAbsDiff(r.enhanced.re.value(), x.re.Reshaped({T, F})) < 1e-12);
    CHECK(MaxAbsDiff(r.enhanced.im.value(), x.im.Reshaped({T, F})) < 1e-12);
  }
  SUBCASE("any channel count, permutation invariant") {
    for (std::size_t C : {2, 3, 4}) {
      auto x = RandomComplex({T, F, C}, rng);
      std::vector<std::size_t> perm(C);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Tape tape;
      ParamScope ps(tape, store);
      auto a = Enhance(ps, cfg, ConstantC(tape, x));
      auto b = Enhance(ps, cfg, ConstantC(tape, PermuteChannels(x, perm)));
      CHECK(MaxAbsDiff(a.enhanced.re.value(), b.enhanced.re.value()) < 1e-9);
      CHECK(MaxAbsDiff(a.enhanced.im.value(), b.enhanced.im.value()) < 1e-9);
      double sum = 0;
      for (std::size_t c = 0; c < C; ++c) {
        CHECK(std::abs(b.reference.value()[c] - a.reference.value()[perm[c]]) < 1e-9);
        sum += a.reference.value()[c];
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
      for (double m : a.speech_mask.value().vec()) CHECK((m >= 0.0 && m <= 1.0));
    }
  }
  SUBCASE("noisy variant passes channel 0") {
    auto x = RandomComplex({T, F, 3}, rng);
    auto noisy = cfg;
    noisy.variant = BeamformerVariant::kNoisy;
    Tape tape;
    ParamScope ps(tape, store);
    auto r = Enhance(ps, noisy, ConstantC(tape, x));
    for (std::size_t i = 0; i < T * F; ++i) CHECK(r.enhanced.re.value()[i] == x.re[i * 3]);
  }
  SUBCASE("gradient of a loss through enhance") {
    auto x = RandomComplex({4, 3, 2}, rng, 0.5);
    auto small = TinyConfig(BeamformerVariant::kMaskMvdr, 3);
    ParameterStore s2;
    RegisterBeamformer(s2, small);
    s2.InitUniform(0.5, 12);
    std::vector<std::string> names;
    for (const auto &[name, value] : s2.all()) names.push_back(name);
    auto err = StoreGradientErrors(s2, names, [&](ParamScope &ps) {
      auto r = Enhance(ps, small, ConstantC(ps.tape(), x));
      return ad::Sum(ad::Log(ad::AddScalar(PowerSpectrum(r.enhanced), 1e-3)));
    });
    CHECK(MaxOf(err) < 1e-4);
  }
}

TEST_CASE("enhance with filter_net: gradient") {
  std::mt19937_64 rng(13);
  auto cfg = TinyConfig(BeamformerVariant::kFilterNet, 3);
  ParameterStore store;
  RegisterBeamformer(store, cfg);
  store.InitUniform(0.5, 14);
  auto x = RandomComplex({4, 3, 2}, rng, 0.5);
  std::vector<std::string> names;
  for (const auto &[name, value] : store.all()) names.push_back(name);
  auto err = StoreGradientErrors(store, names, [&](ParamScope &ps) {
    auto r = Enhance(ps, cfg, ConstantC(ps.tape(), x));
    return ad::Sum(PowerSpectrum(r.enhanced));
  });
  CHECK(MaxOf(err) < 1e-4);
}

TEST_CASE("oracle masks beat the best single channel") {
  // Two-microphone scene: a speech-like source and a directional interferer
  // arriving with different inter-channel delays.
  auto opts = StftOptions::Tiny();
  const std::size_t N = 8000;
  std::mt19937_64 rng(15);
  std::normal_distribution<double> nd;
  std::vector<double> src(N + 16), noise(N + 16);
  for (std::size_t n = 0; n < src.size(); ++n) {
    const double env = 0.5 + 0.5 * std::sin(2 * std::numbers::pi * 3.0 * n / 8000.0);
    src[n] = env * (std::sin(2 * std::numbers::pi * 440.0 * n / 8000.0) +
                    0.6 * std::sin(2 * std::numbers::pi * 1250.0 * n / 8000.0));
    noise[n] = nd(rng);
  }
  Waveform speech, interf;
  speech.sample_rate = interf.sample_rate = 8000;
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<double> s(N), v(N);
    for (std::size_t n = 0; n < N; ++n) {
      s[n] = src[n + 2 * c];
      v[n] = noise[n + 16 - 5 * c];
    }
    speech.samples.push_back(s);
    interf.samples.push_back(v);
  }
  auto S = Stft(speech, opts).coeffs, V = Stft(interf, opts).coeffs;
  const std::size_t T = S.re.dim(0), F = S.re.dim(1);
  ComplexTensor X(S.shape());
  for (std::size_t i = 0; i < X.re.size(); ++i) {
    X.re[i] = S.re[i] + V.re[i];
    X.im[i] = S.im[i] + V.im[i];
  }
  Tensor ms({T, F}), mn({T, F});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t i = (t * F + f) * 2;
      const double ps = std::norm(At(S, i)), pn = std::norm(At(V, i));
      ms.at(t, f) = ps / (ps + pn + 1e-12);
      mn.at(t, f) = 1.0 - ms.at(t, f);
    }
  Tape tape;
  CVar g = MvdrFilter(EstimatePsd(ConstantC(tape, X), tape.Constant(ms)),
                      EstimatePsd(ConstantC(tape, X), tape.Constant(mn)),
                      tape.Constant(Tensor::Vector({1.0, 0.0})));
  auto ys = FilterAndSum(ConstantC(tape, S), g).value();
  auto yn = FilterAndSum(ConstantC(tape, V), g).value();
  auto energy = [](const ComplexTensor &z, std::size_t stride, std::size_t off) {
    double e = 0;
    for (std::size_t i = off; i < z.re.size(); i += stride) e += std::norm(At(z, i));
    return e;
  };
  const double out_snr = 10 * std::log10(energy(ys, 1, 0) / energy(yn, 1, 0));
  double best = -1e9;
  for (std::size_t c = 0; c < 2; ++c)
    best = std::max(best, 10 * std::log10(energy(S, 2, c) / energy(V, 2, c)));
  CHECK(out_snr > best);
}
