#ifndef POLICYBOUNDS_RESTRICTIONS_HPP
#define POLICYBOUNDS_RESTRICTIONS_HPP

#include <string>
#include <vector>

#include "policybounds/identify.hpp"
#include "policybounds/lp.hpp"
#include "policybounds/model.hpp"

namespace policybounds {

/// Linear constraint block produced from one RestrictionSpec. Rows may
/// reference pi columns and, for disagreement bounds, fresh eta columns
/// numbered from base_aux_col upward.
struct ConstraintBlock {
  std::vector<lp::Row> rows;
  int new_aux_columns = 0;
  std::vector<std::string> aux_names;  // parallel to the new columns
  std::vector<std::string> warnings;
};

/// Compiles a non-disagreement restriction. base_aux_col is the next free
/// LP column (unused here, present for interface symmetry).
ConstraintBlock compile_restriction(const RestrictionSpec& spec,
                                    const IdentifyProblem& ctx,
                                    int base_aux_col);

/// Compiles a pairwise or average disagreement bound into its Fréchet
/// eta-linearization. Requires PolicyMonotonicity in the restriction set;
/// throws std::invalid_argument otherwise.
ConstraintBlock compile_disagreement(const RestrictionSpec& spec,
                                     const IdentifyProblem& ctx,
                                     int base_aux_col);

/// Appends every restriction in ctx to the LP (aux columns included).
void apply_restrictions(lp::LPProblem& p, const IdentifyProblem& ctx,
                        BoundsDiagnostics* diag,
                        std::vector<std::string>* warnings);

}  // namespace policybounds

#endif  // POLICYBOUNDS_RESTRICTIONS_HPP
