#include "ncvem/multi_index.hpp"

#include "ncvem/common.hpp"

namespace ncvem {

int polynomial_space_dim(int dim, int degree) {
  if (degree < 0) return 0;
  long long num = 1, den = 1;
  for (int i = 1; i <= dim; ++i) {
    num *= degree + i;
    den *= i;
  }
  return static_cast<int>(num / den);
}

std::vector<MultiIndex> enumerate_multi_indices(int dim, int max_degree) {
  if (dim < 1 || dim > 3) throw ValidationError("multi-index dimension must be 1, 2 or 3");
  std::vector<MultiIndex> out;
  if (max_degree < 0) return out;
  out.reserve(polynomial_space_dim(dim, max_degree));
  for (int deg = 0; deg <= max_degree; ++deg) {
    if (dim == 1) {
      out.push_back({{deg, 0, 0}, 1});
    } else if (dim == 2) {
      for (int s1 = deg; s1 >= 0; --s1) out.push_back({{s1, deg - s1, 0}, 2});
    } else {
      for (int s1 = deg; s1 >= 0; --s1)
        for (int s2 = deg - s1; s2 >= 0; --s2) out.push_back({{s1, s2, deg - s1 - s2}, 3});
    }
  }
  return out;
}

} // namespace ncvem
