#include "vioscan/splits.hpp"

#include <cmath>
#include <map>
#include <set>

#include "vioscan/error.hpp"
#include "vioscan/text.hpp"

namespace vioscan::splits {

SplitPlan coa_split(std::span<const corpus::NerRecord> records, double test_fraction,
                    std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::Split, "test fraction must lie in (0,1)");
  }
  // Keyed by name so the shuffle input does not depend on record order.
  std::map<std::string, std::size_t> group_sizes;
  bool has_sentinel = false;
  for (const auto& r : records) {
    if (r.cause_of_action) {
      ++group_sizes[*r.cause_of_action];
    } else {
      has_sentinel = true;
    }
  }
  const std::size_t groups = group_sizes.size() + (has_sentinel ? 1 : 0);
  if (groups < 2) {
    throw Error(ErrorKind::Split, "need at least 2 cause-of-action groups, found " +
                                      std::to_string(groups));
  }

  std::vector<std::string> order;
  order.reserve(group_sizes.size());
  for (const auto& [name, n] : group_sizes) order.push_back(name);
  text::Rng rng(seed);
  rng.shuffle(order);

  const double target = test_fraction * static_cast<double>(records.size());
  std::set<std::string> test_groups;
  std::size_t test_count = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (static_cast<double>(test_count) >= target) break;
    const bool last_for_train = !has_sentinel && i + 1 == order.size();
    if (last_for_train) break;
    test_groups.insert(order[i]);
    test_count += group_sizes[order[i]];
  }

  SplitPlan plan;
  plan.seed = seed;
  plan.test_fraction_target = test_fraction;
  for (const auto& r : records) {
    const bool test = r.cause_of_action && test_groups.contains(*r.cause_of_action);
    (test ? plan.test_ids : plan.train_ids).push_back(r.id);
  }
  return plan;
}

FoldPlan leave_one_out(std::span<const corpus::NliRecord> records) {
  std::set<LegalDomain> domains;
  for (const auto& r : records) domains.insert(r.domain);
  if (domains.size() < 2) {
    throw Error(ErrorKind::Split, "leave-one-out needs at least 2 domains, found " +
                                      std::to_string(domains.size()));
  }
  FoldPlan plan;
  for (const auto& d : domains) {
    Fold f;
    f.held_out_domain = d;
    for (const auto& r : records) (r.domain == d ? f.test_ids : f.train_ids).push_back(r.id);
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

}  // namespace vioscan::splits
