#pragma once

#include <vector>

namespace ctxsearch {

using Embedding = std::vector<double>;

/// dot(a, b) / (|a| |b|). Throws Error(DimensionMismatch) or Error(ZeroVector).
double cosine(const Embedding& a, const Embedding& b);

double dot(const Embedding& a, const Embedding& b);
double l2_norm(const Embedding& v);

/// Unit-length copy. Throws Error(ZeroVector).
Embedding normalized(const Embedding& v);

}  // namespace ctxsearch
