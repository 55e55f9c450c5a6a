#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "atomic/gtfs/feed.hpp"
#include "atomic/mobility/consistency.hpp"
#include "atomic/ngsi/client.hpp"

namespace atomic::ngsi2gtfs {

using mobility::TypedEntity;

struct SkippedEntity {
  std::string id;
  std::string type;
  std::string reason;
};

struct Discovery {
  std::vector<TypedEntity> entities;
  std::vector<SkippedEntity> skipped;
};

/// All entities of the six static GTFS types. Entities that fail conversion
/// land in `skipped`. Throws BrokerError(unavailable).
Discovery discover(ngsi::BrokerClient& broker);

class InconsistentInput : public std::runtime_error {
public:
  explicit InconsistentInput(mobility::ConsistencyReport report);
  mobility::ConsistencyReport const& report() const { return report_; }

private:
  mobility::ConsistencyReport report_;
};

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One row per static entity; non-static entities are ignored. Throws
/// InconsistentInput when the static subset has findings or no agency.
gtfs::GtfsFeed build_feed(std::vector<TypedEntity> const& entities);

/// Inverse of build_feed.
std::vector<TypedEntity> feed_entities(gtfs::GtfsFeed const& feed);

/// Lowercase hex SHA-256 of the feed written without a version. Stored back
/// as the archive's version, so identical content always yields identical bytes.
std::string content_version(gtfs::GtfsFeed const& feed);

struct ExportOptions {
  std::filesystem::path out;
  /// When set, upserts a GtfsFeedPointer with this feed id after writing.
  std::optional<std::string> register_feed_id;
  /// Source URL stored in the pointer; defaults to file://<absolute out>.
  std::optional<std::string> source_url;
};

struct ExportSummary {
  std::map<std::string, std::size_t> row_counts;  // by GTFS file name
  std::size_t skip_count{0};
  std::vector<SkippedEntity> skipped;
  std::string feed_version;
  std::optional<std::string> pointer_id;
};

/// discover + build_feed + write. The archive is written to a temporary file
/// and renamed into place. Throws BrokerError(unavailable), InconsistentInput
/// or IoFailure.
ExportSummary run_export(ngsi::BrokerClient& broker, ExportOptions const& options);

nlohmann::json to_json(ExportSummary const& s);
nlohmann::json to_json(std::vector<SkippedEntity> const& skipped);

}  // namespace atomic::ngsi2gtfs
