#pragma once

#include <string>
#include <vector>

#include "atomic/mobility/model.hpp"

namespace atomic::mobility {

struct Finding {
  enum class Kind { dangling_reference, invariant_violation, duplicate_id, conversion_failure };

  Kind kind;
  std::string entity_id;
  std::string detail;

  friend bool operator==(Finding const&, Finding const&) = default;
};

std::string_view to_string(Finding::Kind);

struct ConsistencyReport {
  std::vector<Finding> findings;

  bool empty() const { return findings.empty(); }
  std::size_t count(Finding::Kind k) const;
  std::string summary() const;
};

/// Checks a set of urban-mobility entities. One finding per
///  - model-typed context entity that fails conversion,
///  - duplicate business id (second and later occurrences),
///  - reference to an entity absent from the set,
///  - violated per-entity invariant,
///  - adjacent stop-time pair along a trip whose stopSequence does not
///    increase, and, separately, whose times go backwards.
/// Entities of non-model types are ignored.
ConsistencyReport validate_consistency(std::vector<ngsi::ContextEntity> const& entities);
ConsistencyReport validate_consistency(std::vector<TypedEntity> const& entities);

}  // namespace atomic::mobility
