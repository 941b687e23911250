#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "implicit/integrate.hpp"

namespace implicit::detail {

/// Vector field of chain direction `stage` evaluated at y, written to out.
using StageField = std::function<void(std::size_t stage, std::span<const double> y, std::span<double> out)>;

/// Predicate over the multi-index of a stage's initial node.
using NodeFilter = std::function<bool(std::span<const std::size_t>)>;

StageField make_stage_field(const ImplicitSystem& system, FieldMode mode, const VariablePermutation& perm,
                            double minor_rel_tol);

/// Integrates direction `stage` from every initial node accepted by
/// `include`, starting `start_step` steps away from the origin slot (0 for a
/// fresh stage, the old half count when resuming).
void integrate_stage(ParamGrid& grid, const StageField& field, const Box& domain, std::size_t stage,
                     std::size_t start_step, const NodeFilter& include, unsigned threads);

/// Validates spans/steps and returns the half counts N_j = span_j / h_j.
std::vector<std::size_t> half_counts(std::span<const double> spans, std::span<const double> steps,
                                     std::size_t expected);

/// Fills a fresh grid from the seed through every stage.
ParamGrid run_chain(const StageField& field, const Box& domain, const Vector& seed,
                    std::vector<std::size_t> half, std::vector<double> steps, FieldMode mode,
                    VariablePermutation perm, double minor_rel_tol, unsigned threads);

}  // namespace implicit::detail
