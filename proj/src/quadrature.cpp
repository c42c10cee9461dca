#include "degenbranch/quadrature.hpp"

#include <fmt/format.h>

#include "degenbranch/error.hpp"

namespace degenbranch::quad {

const Result& require_converged(const Result& r, std::string_view what) {
  if (!r.converged) {
    throw NumericAccuracyError(
        fmt::format("{}: quadrature did not reach its target (estimate {:.3e}, "
                    "{} intervals)",
                    what, r.abs_error, r.intervals),
        r.abs_error);
  }
  return r;
}

}  // namespace degenbranch::quad
