#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "atomic/common/time.hpp"
#include "atomic/mobility/model.hpp"

namespace atomic::gtfs {

using mobility::Agency;
using mobility::GeoPoint;
using mobility::Route;
using mobility::Service;
using mobility::Stop;
using mobility::StopTime;
using mobility::Trip;
using atomic::ServiceDate;

/// A static GTFS feed. Tables are kept in primary-key order by canonicalize();
/// read_feed always returns a canonical feed.
struct GtfsFeed {
  std::vector<Agency> agencies;
  std::vector<Stop> stops;
  std::vector<Route> routes;
  std::vector<Service> services;  // calendar.txt
  std::vector<Trip> trips;
  std::vector<StopTime> stop_times;  // ordered by (trip_id, stop_sequence)
  std::optional<std::string> feed_version;

  friend bool operator==(GtfsFeed const&, GtfsFeed const&) = default;
};

class GtfsError : public std::runtime_error {
public:
  enum class Kind { bad_time_format, missing_file, missing_column, malformed_row, referential_violation, bad_archive };

  GtfsError(Kind kind, std::string const& what, std::string table = {}, std::size_t row = 0)
      : std::runtime_error{what}, kind_{kind}, table_{std::move(table)}, row_{row} {}

  Kind kind() const { return kind_; }
  /// File name such as "trips.txt", empty when not tied to a table.
  std::string const& table() const { return table_; }
  /// 1-based data row (the header is row 0), 0 when not tied to a row.
  std::size_t row() const { return row_; }

private:
  Kind kind_;
  std::string table_;
  std::size_t row_;
};

std::string_view to_string(GtfsError::Kind);

/// "H+:MM:SS" to seconds since service-day midnight. Hours may exceed 23.
int parse_gtfs_time(std::string_view text);
/// Zero-padded "HH:MM:SS"; hours widen past two digits as needed.
std::string format_gtfs_time(int seconds);

/// Sorts every table by primary key.
void canonicalize(GtfsFeed& feed);

/// Throws GtfsError{referential_violation} naming the first offending table
/// and row, or {malformed_row} on a duplicate primary key. Rows are numbered
/// in the order the tables hold them.
void validate_feed(GtfsFeed const& feed);

/// The feed version travels in the zip archive comment.
GtfsFeed read_feed(std::string_view zip_bytes);
std::string write_feed(GtfsFeed const& feed);

/// Some calendar row has start_date <= date <= end_date.
bool feed_valid_on(GtfsFeed const& feed, ServiceDate const& date);

/// Union of all calendar ranges, nullopt for a feed without services.
std::optional<std::pair<ServiceDate, ServiceDate>> feed_date_span(GtfsFeed const& feed);

}  // namespace atomic::gtfs
