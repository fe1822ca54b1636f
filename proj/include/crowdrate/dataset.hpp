#ifndef CROWDRATE_DATASET_HPP
#define CROWDRATE_DATASET_HPP

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdrate/error.hpp"

namespace crowdrate {

struct RatingRow {
  std::string item;
  std::string rater;
  int rating = 0;
};

// Long-form binary rating data. Indices are contiguous and zero-based in
// memory; the original string ids are kept for round-tripping. Immutable
// after construction and safe to share across threads.
struct RatingDataset {
  int num_items = 0;
  int num_raters = 0;
  std::vector<int> item;    // size N, in [0, num_items)
  std::vector<int> rater;   // size N, in [0, num_raters)
  std::vector<int> rating;  // size N, in {0, 1}
  std::vector<std::vector<int>> item_ratings;  // per item: rating indices

  std::vector<std::string> item_ids;   // index -> original id
  std::vector<std::string> rater_ids;  // index -> original id

  int num_ratings() const { return static_cast<int>(rating.size()); }

  // Prior-only dataset: parameter dimensions without observations.
  static RatingDataset empty(int num_items, int num_raters) {
    RatingDataset d;
    d.num_items = num_items;
    d.num_raters = num_raters;
    d.item_ratings.assign(static_cast<std::size_t>(num_items), {});
    d.item_ids.reserve(num_items);
    d.rater_ids.reserve(num_raters);
    for (int i = 0; i < num_items; ++i) d.item_ids.push_back("i" + std::to_string(i + 1));
    for (int j = 0; j < num_raters; ++j) d.rater_ids.push_back("r" + std::to_string(j + 1));
    return d;
  }
};

// Reindexes string ids to contiguous indices in first-appearance order and
// builds the per-item rating lists. Duplicate (item, rater) pairs are kept:
// a rater may rate the same item more than once.
inline RatingDataset validate_dataset(std::span<const RatingRow> rows) {
  if (rows.empty()) throw DataError("rating data is empty");
  RatingDataset d;
  std::unordered_map<std::string, int> item_index, rater_index;
  d.item.reserve(rows.size());
  d.rater.reserve(rows.size());
  d.rating.reserve(rows.size());
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const RatingRow& r = rows[n];
    if (r.rating != 0 && r.rating != 1) {
      throw DataError("rating for (" + r.item + ", " + r.rater + ") is " +
                      std::to_string(r.rating) + "; must be 0 or 1");
    }
    auto [it, inserted] = item_index.try_emplace(r.item, d.num_items);
    if (inserted) {
      ++d.num_items;
      d.item_ids.push_back(r.item);
    }
    auto [jt, jnew] = rater_index.try_emplace(r.rater, d.num_raters);
    if (jnew) {
      ++d.num_raters;
      d.rater_ids.push_back(r.rater);
    }
    d.item.push_back(it->second);
    d.rater.push_back(jt->second);
    d.rating.push_back(r.rating);
  }
  d.item_ratings.assign(static_cast<std::size_t>(d.num_items), {});
  for (int n = 0; n < d.num_ratings(); ++n) d.item_ratings[d.item[n]].push_back(n);
  return d;
}

// Index-based construction used by the simulators.
inline RatingDataset dataset_from_indices(int num_items, int num_raters,
                                          std::vector<int> item, std::vector<int> rater,
                                          std::vector<int> rating) {
  RatingDataset d;
  d.num_items = num_items;
  d.num_raters = num_raters;
  d.item = std::move(item);
  d.rater = std::move(rater);
  d.rating = std::move(rating);
  d.item_ratings.assign(static_cast<std::size_t>(num_items), {});
  for (int n = 0; n < d.num_ratings(); ++n) d.item_ratings[d.item[n]].push_back(n);
  d.item_ids.reserve(num_items);
  d.rater_ids.reserve(num_raters);
  for (int i = 0; i < num_items; ++i) d.item_ids.push_back("i" + std::to_string(i + 1));
  for (int j = 0; j < num_raters; ++j) d.rater_ids.push_back("r" + std::to_string(j + 1));
  return d;
}

}  // namespace crowdrate

#endif
