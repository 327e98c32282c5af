// include/beamspeech/optimizer.h

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

#ifndef BEAMSPEECH_OPTIMIZER_H_
#define BEAMSPEECH_OPTIMIZER_H_

#include "beamspeech/nn.h"

namespace beamspeech {

struct AdaDeltaOptions {
  double rho = 0.95;
  double eps = 1e-8;
  double clip_norm = 5.0;  // global L2 norm; <= 0 disables clipping
};

struct StepReport {
  bool applied = false;
  bool clipped = false;
  double grad_norm = 0.0;
};

// AdaDelta with global-norm gradient clipping applied before the update.
//   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
//   dx      <- -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
// Parameters absent from the gradient map are treated as having zero gradient.
class AdaDelta {
 public:
  explicit AdaDelta(AdaDeltaOptions opts = {}) : opts_(opts) {}

  // Skips the update entirely (applied == false) if any gradient entry is
  // non-finite.
  StepReport Step(ParameterStore &store, const GradMap &grads);

  const AdaDeltaOptions &options() const { return opts_; }
  void set_eps(double eps) { opts_.eps = eps; }

  // Accumulators keyed by parameter name; created lazily on first Step().
  const GradMap &acc_grad() const { return acc_grad_; }
  const GradMap &acc_update() const { return acc_update_; }
  void SetState(GradMap acc_grad, GradMap acc_update);

 private:
  AdaDeltaOptions opts_;
  GradMap acc_grad_;
  GradMap acc_update_;
};

double GlobalNorm(const GradMap &grads);

// Adds `src` into `dst` in name order (deterministic reduction).
void AccumulateGrads(GradMap &dst, const GradMap &src, double scale = 1.0);

}  // namespace beamspeech

#endif  // BEAMSPEECH_OPTIMIZER_H_
