#include "factex/design.hpp"

#include <algorithm>
#include <set>

namespace factex {

FactorialDesign::FactorialDesign(int k, std::vector<std::string> names)
    : K(k), factor_names(std::move(names)) {
  if (K < 1 || K > 16)
    throw InputError("design: K must be in 1..16, got " + std::to_string(K));
  if (factor_names.empty()) {
    factor_names.reserve(static_cast<std::size_t>(K));
    for (int i = 1; i <= K; ++i) factor_names.push_back("f" + std::to_string(i));
  }
  if (static_cast<int>(factor_names.size()) != K)
    throw InputError("design: expected " + std::to_string(K) + " factor names, got " +
                     std::to_string(factor_names.size()));
  std::set<std::string> seen;
  for (const auto& name : factor_names) {
    if (name.empty()) throw InputError("design: factor names must be non-empty");
    if (!seen.insert(name).second)
      throw InputError("design: duplicate factor name '" + name + "'");
  }
}

int FactorialDesign::treatment_index(const std::vector<int>& levels) const {
  if (static_cast<int>(levels.size()) != K)
    throw InputError("design: expected " + std::to_string(K) + " levels, got " +
                     std::to_string(levels.size()));
  int index = 0;
  for (int level : levels) {
    if (level != 0 && level != 1)
      throw InputError("design: levels must be 0 or 1, got " + std::to_string(level));
    index = (index << 1) | level;
  }
  return index + 1;
}

std::vector<int> FactorialDesign::levels_of(int treatment) const {
  if (treatment < 1 || treatment > num_treatments())
    throw InputError("design: treatment index " + std::to_string(treatment) +
                     " outside 1.." + std::to_string(num_treatments()));
  std::vector<int> levels(static_cast<std::size_t>(K));
  int bits = treatment - 1;
  for (int k = K - 1; k >= 0; --k) {
    levels[static_cast<std::size_t>(k)] = bits & 1;
    bits >>= 1;
  }
  return levels;
}

ContrastMatrix ContrastMatrix::build(const FactorialDesign& design) {
  ContrastMatrix m;
  m.K_ = design.K;
  m.J_ = design.num_treatments();
  const int J = m.J_;

  // Column order: mean, then factor subsets grouped by size and
  // lexicographic within each size (for K=3: 1, 2, 3, 12, 13, 23, 123).
  m.masks_.push_back(0u);
  for (int size = 1; size <= m.K_; ++size) {
    std::vector<int> pick(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) pick[static_cast<std::size_t>(i)] = i;
    while (true) {
      unsigned mask = 0;
      for (int i : pick) mask |= 1u << i;
      m.masks_.push_back(mask);
      // next lexicographic size-subset of {0..K-1}
      int pos = size - 1;
      while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == m.K_ - size + pos) --pos;
      if (pos < 0) break;
      ++pick[static_cast<std::size_t>(pos)];
      for (int i = pos + 1; i < size; ++i)
        pick[static_cast<std::size_t>(i)] = pick[static_cast<std::size_t>(i - 1)] + 1;
    }
  }

  m.labels_.reserve(static_cast<std::size_t>(J));
  m.labels_.push_back("mean");
  for (int col = 1; col < J; ++col) {
    std::string label;
    for (int k = 0; k < m.K_; ++k) {
      if (!(m.masks_[static_cast<std::size_t>(col)] & (1u << k))) continue;
      if (!label.empty()) label += ":";
      label += design.factor_names[static_cast<std::size_t>(k)];
    }
    m.labels_.push_back(label);
  }

  m.entries_.assign(static_cast<std::size_t>(J) * J, 0);
  for (int row = 1; row <= J; ++row) {
    std::vector<int> levels = design.levels_of(row);
    for (int col = 0; col < J; ++col) {
      // product over the column's factors of (2 z_k - 1)
      int value = 1;
      for (int k = 0; k < m.K_; ++k)
        if (m.masks_[static_cast<std::size_t>(col)] & (1u << k))
          value *= 2 * levels[static_cast<std::size_t>(k)] - 1;
      m.entries_[static_cast<std::size_t>(row - 1) * J + col] = static_cast<std::int8_t>(value);
    }
  }
  return m;
}

int ContrastMatrix::column_of_label(const std::string& label) const {
  for (int col = 1; col < J_; ++col)
    if (labels_[static_cast<std::size_t>(col)] == label) return col;
  return 0;
}

std::vector<long long> unit_effect_numerators(const std::vector<int>& row,
                                              const ContrastMatrix& L) {
  if (static_cast<int>(row.size()) != L.J())
    throw InputError("unit effects: expected " + std::to_string(L.J()) +
                     " outcomes, got " + std::to_string(row.size()));
  std::vector<long long> out(static_cast<std::size_t>(L.J()), 0);
  for (int j = 1; j <= L.J(); ++j) {
    int y = row[static_cast<std::size_t>(j - 1)];
    if (y != 0 && y != 1)
      throw InputError("unit effects: outcomes must be 0 or 1, got " + std::to_string(y));
    if (y == 0) continue;
    for (int col = 0; col < L.J(); ++col) out[static_cast<std::size_t>(col)] += L.entry(j, col);
  }
  return out;
}

std::vector<double> unit_effects(const std::vector<int>& row, const ContrastMatrix& L) {
  std::vector<long long> num = unit_effect_numerators(row, L);
  const double scale = 1.0 / static_cast<double>(1LL << (L.K() - 1));
  std::vector<double> out(num.size());
  for (std::size_t i = 0; i < num.size(); ++i) out[i] = static_cast<double>(num[i]) * scale;
  return out;
}

}  // namespace factex
