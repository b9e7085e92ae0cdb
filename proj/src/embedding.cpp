#include "ctxsearch/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctxsearch/errors.hpp"

namespace ctxsearch {

double dot(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const Embedding& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(const Embedding& a, const Embedding& b) {
  const double d = dot(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return std::clamp(d / (na * nb), -1.0, 1.0);
}

Embedding normalized(const Embedding& v) {
  const double n = l2_norm(v);
  if (n == 0.0) throw Error(ErrorCode::ZeroVector, "cannot normalise a zero vector");
  Embedding out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

}  // namespace ctxsearch
