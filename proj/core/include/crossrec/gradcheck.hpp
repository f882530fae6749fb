#pragma once

#include <functional>
#include <vector>

#include "crossrec/nn.hpp"

namespace crossrec {

// Compares the analytic gradients already stored in `params` against
// central finite differences of `loss_fn` and returns the worst relative
// error over every parameter entry.
//
// `loss_fn` must be deterministic: any stochastic layer has to draw from
// an rng that the closure resets on every call, so masks are frozen
// across the +/-eps evaluations.
double grad_check(const std::vector<Param*>& params,
                  const std::function<double()>& loss_fn, double eps = 1e-5);

// Runs the built-in verification suite (affine, deep ELU MLP + softmax CE,
// SDAE graph, full DSN objective, GRL sign flip). Prints one line per
// check; returns false if any check fails its tolerance.
bool run_gradcheck_suite(bool verbose = true);

}  // namespace crossrec
