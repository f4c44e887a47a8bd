// Shared scalar/vector types, error categories and logging for the ncvem library.

#ifndef NCVEM_COMMON_HPP
#define NCVEM_COMMON_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ncvem {

// Points and normals are stored as 3-vectors in both 2D and 3D; 2D entities
// keep z = 0 so most geometric code is dimension-agnostic.
using Vec3 = Eigen::Vector3d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised for malformed inputs: bad files, inconsistent connectivity, invalid options.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a numerical contract is broken: singular local systems,
/// non-convergent solves, lost symmetry/definiteness.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

/// Level parsed once from the NCVEM_LOG environment variable (error|info|debug).
LogLevel log_level();

/// Thread-safe write to stderr, filtered by log_level().
void log_message(LogLevel level, const std::string& msg);

} // namespace ncvem

#endif
