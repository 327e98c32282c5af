// src/tensorkit/optimizer.cc

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

#include "beamspeech/optimizer.h"

#include <cmath>

namespace beamspeech {

double GlobalNorm(const GradMap &grads) {
  double s = 0.0;
  for (const auto &kv : grads)
    for (double v : kv.second.vec()) s += v * v;
  return std::sqrt(s);
}

void AccumulateGrads(GradMap &dst, const GradMap &src, double scale) {
  for (const auto &kv : src) {
    auto it = dst.find(kv.first);
    if (it == dst.end()) {
      Tensor t = kv.second;
      for (auto &v : t.vec()) v *= scale;
      dst.emplace(kv.first, std::move(t));
      continue;
    }
    if (it->second.shape() != kv.second.shape())
      throw ShapeError("AccumulateGrads", kv.first);
    for (std::size_t i = 0; i < kv.second.size(); ++i) it->second[i] += scale * kv.second[i];
  }
}

void AdaDelta::SetState(GradMap acc_grad, GradMap acc_update) {
  acc_grad_ = std::move(acc_grad);
  acc_update_ = std::move(acc_update);
}

StepReport AdaDelta::Step(ParameterStore &store, const GradMap &grads) {
  StepReport report;
  for (const auto &kv : grads) {
    const Tensor &p = store.Get(kv.first);
    if (p.shape() != kv.second.shape())
      throw ShapeError("adadelta", kv.first + ": gradient " + ShapeString(kv.second.shape()) +
                                       " vs parameter " + ShapeString(p.shape()));
    if (!kv.second.AllFinite()) return report;
  }
  report.grad_norm = GlobalNorm(grads);
  double scale = 1.0;
  if (opts_.clip_norm > 0.0 && report.grad_norm > opts_.clip_norm) {
    scale = opts_.clip_norm / report.grad_norm;
    report.clipped = true;
  }
  const double rho = opts_.rho, eps = opts_.eps;
  for (const auto &kv : store.all()) {
    const std::string &name = kv.first;
    Tensor &param = store.Mutable(name);
    auto git = grads.find(name);
    auto &eg = acc_grad_.try_emplace(name, param.shape(), 0.0).first->second;
    auto &ex = acc_update_.try_emplace(name, param.shape(), 0.0).first->second;
    for (std::size_t i = 0; i < param.size(); ++i) {
      double g = git == grads.end() ? 0.0 : scale * git->second[i];
      eg[i] = rho * eg[i] + (1.0 - rho) * g * g;
      double dx = -std::sqrt(ex[i] + eps) / std::sqrt(eg[i] + eps) * g;
      ex[i] = rho * ex[i] + (1.0 - rho) * dx * dx;
      param[i] += dx;
    }
  }
  report.applied = true;
  return report;
}

}  // namespace beamspeech
