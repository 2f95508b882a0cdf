#include "joinsample/acyclic_index.hpp"

#include "joinsample/errors.hpp"

#include <algorithm>

namespace joinsample {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw CounterOverflow("degree product exceeds 64 bits");
  return out;
}

int log2_exact(std::uint64_t x) { return 63 - __builtin_clzll(x); }

template <typename T>
void grow(std::vector<T>& v, std::size_t index, const T& fill = T{}) {
  if (v.size() <= index) v.resize(index + 1, fill);
}

}  // namespace

TreeIndex::TreeIndex(Database& db, const RootedTree& tree, const std::vector<bool>& grouping, IndexMetrics& metrics)
    : tree_(tree), nodes_(tree.attrs.size()), metrics_(metrics) {
  for (std::size_t e = 0; e < nodes_.size(); ++e) {
    auto& n = nodes_[e];
    n.rel = &db.relation(static_cast<RelationId>(e));
    const bool is_root = e == tree.root;
    if (!is_root) n.key_index = &db.index(n.rel->id(), tree.key[e]);
    for (std::size_t ci = 0; ci < tree.children[e].size(); ++ci) {
      const auto c = tree.children[e][ci];
      nodes_[c].position_in_parent = ci;
      n.child_index.push_back(&db.index(n.rel->id(), tree.key[c]));
    }
    if (!is_root && !tree.is_leaf(e) && grouping[e]) {
      AttrSet bar = tree.key[e];
      for (auto c : tree.children[e]) bar = attr_union(bar, tree.key[c]);
      if (bar.size() < tree.attrs[e].size()) {
        n.grouped = true;
        n.group_attrs = bar;
        n.group_index = &db.index(n.rel->id(), bar);
        n.groups_by_child.resize(tree.children[e].size());
      }
    }
  }
}

std::uint64_t TreeIndex::cnt(std::size_t e, KeyId key) const {
  const auto& n = nodes_[e];
  if (tree_.is_leaf(e)) return n.key_index->list_size(key);
  return key < n.cnt.size() ? n.cnt[key] : 0;
}

std::vector<TreeIndex::BucketView> TreeIndex::buckets(std::size_t e, KeyId key) const {
  std::vector<BucketView> out;
  const auto& n = nodes_[e];
  if (key >= n.lists.size()) return out;
  for (const auto& b : n.lists[key]) out.push_back({b.exponent, b.units.size()});
  return out;
}

std::uint64_t TreeIndex::group_frequency(std::size_t e, RowId row) const {
  const auto& n = nodes_[e];
  return n.group_index->list_size(n.group_index->row_key(row));
}

KeyId TreeIndex::unit_key(std::size_t e, std::uint32_t unit) const {
  const auto& n = nodes_[e];
  return n.grouped ? n.group_key[unit] : n.key_index->row_key(unit);
}

KeyId TreeIndex::unit_child_key(std::size_t e, std::uint32_t unit, std::size_t ci) const {
  const auto& n = nodes_[e];
  if (n.grouped) return n.group_child[static_cast<std::size_t>(unit) * n.child_index.size() + ci];
  return n.child_index[ci]->row_key(unit);
}

std::uint64_t TreeIndex::children_product(std::size_t e, std::uint32_t unit) const {
  std::uint64_t prod = 1;
  const auto& kids = tree_.children[e];
  for (std::size_t ci = 0; ci < kids.size() && prod != 0; ++ci) {
    prod = checked_mul(prod, wcnt(kids[ci], unit_child_key(e, unit, ci)));
  }
  return prod;
}

void TreeIndex::bucket_remove(Node& n, KeyId key, std::uint32_t unit) {
  auto& list = n.lists[key];
  const int exp = n.exponent[unit];
  auto it = std::find_if(list.begin(), list.end(), [&](const Bucket& b) { return b.exponent == exp; });
  auto& units = it->units;
  const auto s = n.slot[unit];
  units[s] = units.back();
  n.slot[units[s]] = s;
  units.pop_back();
  if (units.empty()) list.erase(it);
}

void TreeIndex::bucket_add(Node& n, KeyId key, std::uint32_t unit, int exponent) {
  grow(n.lists, key);
  auto& list = n.lists[key];
  auto it = std::lower_bound(list.begin(), list.end(), exponent,
                             [](const Bucket& b, int x) { return b.exponent < x; });
  if (it == list.end() || it->exponent != exponent) it = list.insert(it, Bucket{exponent, {}});
  n.slot[unit] = static_cast<std::uint32_t>(it->units.size());
  it->units.push_back(unit);
}

void TreeIndex::update_unit(std::size_t e, std::uint32_t unit) {
  auto& n = nodes_[e];
  grow(n.exponent, unit, kUnplaced);
  grow(n.slot, unit);
  std::uint64_t fresh = children_product(e, unit);
  if (n.grouped && fresh != 0) {
    fresh = checked_mul(fresh, pow2_ceil(n.group_index->list_size(unit)));
  }
  const int new_exp = fresh == 0 ? kReserve : log2_exact(fresh);
  const int old_exp = n.exponent[unit];
  if (new_exp == old_exp) return;
  const std::uint64_t old = old_exp >= 0 ? (std::uint64_t{1} << old_exp) : 0;
  const KeyId key = unit_key(e, unit);
  if (old_exp >= 0) bucket_remove(n, key, unit);
  if (new_exp >= 0) bucket_add(n, key, unit, new_exp);
  n.exponent[unit] = static_cast<std::int8_t>(new_exp);
  ++metrics_.bucket_moves;

  grow(n.cnt, key, std::uint64_t{0});
  const std::uint64_t before = pow2_ceil(n.cnt[key]);
  n.cnt[key] = n.cnt[key] - old + fresh;
  if (pow2_ceil(n.cnt[key]) != before) {
    ++metrics_.wcnt_doublings;
    propagate(e, key);
  }
}

void TreeIndex::propagate(std::size_t e, KeyId key) {
  const auto p = tree_.parent[e];
  if (p == tree_.root) return;
  const auto& pn = nodes_[p];
  const auto ci = nodes_[e].position_in_parent;
  if (pn.grouped) {
    const auto& by_key = pn.groups_by_child[ci];
    if (key >= by_key.size()) return;
    for (auto g : by_key[key]) {
      ++metrics_.propagation_loop_count;
      update_unit(p, g);
    }
  } else {
    for (auto row : pn.child_index[ci]->rows(key)) {
      ++metrics_.propagation_loop_count;
      update_unit(p, row);
    }
  }
}

void TreeIndex::insert(std::size_t e, RowId row) {
  if (e == tree_.root) return;
  auto& n = nodes_[e];
  if (tree_.is_leaf(e)) {
    const KeyId key = n.key_index->row_key(row);
    const auto size = n.key_index->list_size(key);
    if (pow2_ceil(size) != pow2_ceil(size - 1)) {
      ++metrics_.wcnt_doublings;
      propagate(e, key);
    }
    return;
  }
  if (!n.grouped) {
    update_unit(e, row);
    return;
  }
  const KeyId g = n.group_index->row_key(row);
  const auto feq = n.group_index->list_size(g);
  if (feq == 1) {
    const auto m = n.child_index.size();
    grow(n.group_key, g);
    n.group_key[g] = n.key_index->row_key(row);
    if (n.group_child.size() < (static_cast<std::size_t>(g) + 1) * m) n.group_child.resize((g + 1) * m);
    for (std::size_t ci = 0; ci < m; ++ci) {
      const KeyId ck = n.child_index[ci]->row_key(row);
      n.group_child[static_cast<std::size_t>(g) * m + ci] = ck;
      grow(n.groups_by_child[ci], ck);
      n.groups_by_child[ci][ck].push_back(g);
    }
    update_unit(e, g);
  } else if (pow2_ceil(feq) != pow2_ceil(feq - 1)) {
    update_unit(e, g);
  }
}

std::uint64_t TreeIndex::batch_size(RowId row) const {
  const auto r = tree_.root;
  const auto& n = nodes_[r];
  std::uint64_t size = 1;
  for (std::size_t ci = 0; ci < n.child_index.size() && size != 0; ++ci) {
    size = checked_mul(size, cnt(tree_.children[r][ci], n.child_index[ci]->row_key(row)));
  }
  return size;
}

bool TreeIndex::retrieve(RowId row, std::uint64_t z, std::span<RowId> out) const {
  ++metrics_.retrieve_calls;
  if (z >= batch_size(row)) throw PositionOutOfRange("position beyond the batch");
  const auto r = tree_.root;
  const auto& n = nodes_[r];
  const auto& kids = tree_.children[r];
  out[r] = row;
  // Mixed radix over exact child counts; the last child is least significant.
  for (std::size_t ci = kids.size(); ci-- > 0;) {
    const KeyId key = n.child_index[ci]->row_key(row);
    const auto radix = cnt(kids[ci], key);
    if (!retrieve_key(kids[ci], key, z % radix, out)) {
      ++metrics_.dummy_hits;
      return false;
    }
    z /= radix;
  }
  return true;
}

bool TreeIndex::retrieve_row(std::size_t e, RowId row, std::uint64_t z, std::span<RowId> out) const {
  const auto& n = nodes_[e];
  const auto& kids = tree_.children[e];
  out[e] = row;
  for (std::size_t ci = kids.size(); ci-- > 0;) {
    const KeyId key = n.child_index[ci]->row_key(row);
    const auto radix = wcnt(kids[ci], key);
    if (!retrieve_key(kids[ci], key, z % radix, out)) return false;
    z /= radix;
  }
  return true;
}

bool TreeIndex::retrieve_key(std::size_t e, KeyId key, std::uint64_t z, std::span<RowId> out) const {
  const auto& n = nodes_[e];
  if (tree_.is_leaf(e)) {
    const auto rows = n.key_index->rows(key);
    if (z >= rows.size()) return false;
    out[e] = rows[z];
    return true;
  }
  if (z >= cnt(e, key)) return false;
  const Bucket* hit = nullptr;
  for (const auto& b : n.lists[key]) {
    const std::uint64_t phi = static_cast<std::uint64_t>(b.units.size()) << b.exponent;
    if (z < phi) {
      hit = &b;
      break;
    }
    z -= phi;
  }
  const std::uint64_t j = z >> hit->exponent;
  std::uint64_t ell = z - (j << hit->exponent);
  const auto unit = hit->units[j];
  if (!n.grouped) return retrieve_row(e, unit, ell, out);
  const std::uint64_t h = children_product(e, unit);
  const auto members = n.group_index->rows(unit);
  const std::uint64_t member = ell / h;
  if (member >= members.size()) return false;
  return retrieve_row(e, members[member], ell - member * h, out);
}

AcyclicIndex::AcyclicIndex(Database& db, const JoinQuery& query) {
  trees_.reserve(query.rooted.size());
  for (const auto& rooted : query.rooted) trees_.emplace_back(db, rooted, query.grouping, metrics_);
}

void AcyclicIndex::insert(RelationId rel, RowId row) {
  for (auto& t : trees_) t.insert(rel, row);
}

}  // namespace joinsample
