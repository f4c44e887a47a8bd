// Multi-indices and polynomial space dimensions.

#ifndef NCVEM_MULTI_INDEX_HPP
#define NCVEM_MULTI_INDEX_HPP

#include <array>
#include <vector>

namespace ncvem {

/// Exponent tuple of a monomial in m variables, m in {1,2,3}.
struct MultiIndex {
  std::array<int, 3> s{0, 0, 0};
  int dim = 1;

  int degree() const { return s[0] + s[1] + s[2]; }

  bool operator==(const MultiIndex& o) const { return dim == o.dim && s == o.s; }
};

/// dim P^degree in `dim` variables, i.e. binomial(degree+dim, dim); 0 for degree < 0.
int polynomial_space_dim(int dim, int degree);

/// All multi-indices with |s| <= max_degree in graded lexicographic order:
/// ascending total degree, and within a degree s1 descending, then s2 descending.
/// The ordering is hierarchical: the enumeration for degree l is a prefix of the
/// one for degree l+1.
std::vector<MultiIndex> enumerate_multi_indices(int dim, int max_degree);

} // namespace ncvem

#endif
