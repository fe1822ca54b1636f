#ifndef CROWDRATE_ERROR_HPP
#define CROWDRATE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace crowdrate {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data (bad CSV, out-of-domain ratings, unknown model names).
struct DataError : Error {
  using Error::Error;
};

// Numerical failure (sampler initialization, non-convergent solver).
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace crowdrate

#endif
