#include "atomic/gtfs/feed.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <tuple>

#include "atomic/gtfs/csv.hpp"
#include "atomic/gtfs/zip.hpp"
#include "atomic/ngsi/codec.hpp"

namespace atomic::gtfs {

using Kind = GtfsError::Kind;

std::string_view to_string(GtfsError::Kind k) {
  switch (k) {
    case Kind::bad_time_format: return "BadTimeFormat";
    case Kind::missing_file: return "MissingFile";
    case Kind::missing_column: return "MissingColumn";
    case Kind::malformed_row: return "MalformedRow";
    case Kind::referential_violation: return "ReferentialViolation";
    case Kind::bad_archive: return "BadArchive";
  }
  return "?";
}

namespace {

constexpr std::array<char const*, 7> kWeekdayColumns = {"monday", "tuesday", "wednesday", "thursday",
                                                        "friday", "saturday", "sunday"};

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return v;
}

/// One CSV member with its header resolved to column positions.
class Table {
public:
  Table(ZipArchive const& zip, std::string name) : name_{std::move(name)} {
    auto const* text = zip.find(name_);
    if (text == nullptr) {
      throw GtfsError{Kind::missing_file, "missing " + name_, name_};
    }
    try {
      rows_ = parse_csv(*text);
    } catch (CsvError const& e) {
      throw GtfsError{Kind::malformed_row, name_ + ": " + e.what(), name_};
    }
    if (rows_.empty()) {
      throw GtfsError{Kind::missing_column, name_ + " has no header row", name_};
    }
    for (auto i = 0U; i < rows_[0].size(); ++i) {
      auto col = rows_[0][i];
      // Tolerate whitespace around header names; data values stay verbatim.
      col.erase(0, col.find_first_not_of(' '));
      col.erase(col.find_last_not_of(' ') + 1);
      columns_.emplace(std::move(col), i);
    }
  }

  std::size_t size() const { return rows_.size() - 1; }
  std::string const& name() const { return name_; }

  /// Column index; throws MissingColumn.
  std::size_t column(std::string const& col) const {
    auto const it = columns_.find(col);
    if (it == end(columns_)) {
      throw GtfsError{Kind::missing_column, name_ + " lacks column " + col, name_};
    }
    return it->second;
  }

  std::optional<std::size_t> optional_column(std::string const& col) const {
    auto const it = columns_.find(col);
    return it == end(columns_) ? std::nullopt : std::optional{it->second};
  }

  /// `row` is 1-based.
  std::string const& at(std::size_t row, std::size_t col) const {
    auto const& r = rows_[row];
    if (col >= r.size()) {
      fail(row, "has " + std::to_string(r.size()) + " fields, header has " + std::to_string(rows_[0].size()));
    }
    return r[col];
  }

  std::string get(std::size_t row, std::optional<std::size_t> col) const { return col ? at(row, *col) : std::string{}; }

  template <typename T>
  T number(std::size_t row, std::size_t col) const {
    if (auto v = parse_number<T>(at(row, col))) {
      return *v;
    }
    fail(row, "'" + at(row, col) + "' in column " + rows_[0][col] + " is not a number");
  }

  bool flag(std::size_t row, std::size_t col) const {
    auto const& v = at(row, col);
    if (v != "0" && v != "1") {
      fail(row, "'" + v + "' in column " + rows_[0][col] + " is not 0 or 1");
    }
    return v == "1";
  }

  ServiceDate date(std::size_t row, std::size_t col) const {
    try {
      return ServiceDate::parse(at(row, col));
    } catch (TimeFormatError const& e) {
      fail(row, e.what());
    }
  }

  int time(std::size_t row, std::size_t col) const {
    try {
      return parse_gtfs_time(at(row, col));
    } catch (GtfsError const& e) {
      throw GtfsError{Kind::bad_time_format, row_prefix(row) + e.what(), name_, row};
    }
  }

  [[noreturn]] void fail(std::size_t row, std::string const& what) const {
    throw GtfsError{Kind::malformed_row, row_prefix(row) + what, name_, row};
  }

private:
  std::string row_prefix(std::size_t row) const { return name_ + " row " + std::to_string(row) + ": "; }

  std::string name_;
  std::vector<CsvRow> rows_;
  std::map<std::string, std::size_t> columns_;
};

GtfsFeed parse_tables(ZipArchive const& zip) {
  GtfsFeed f;

  Table const agency{zip, "agency.txt"};
  Table const stops{zip, "stops.txt"};
  Table const routes{zip, "routes.txt"};
  Table const trips{zip, "trips.txt"};
  Table const stop_times{zip, "stop_times.txt"};
  Table const calendar{zip, "calendar.txt"};

  {
    // agency_id may be omitted in single-agency feeds.
    auto const id = agency.optional_column("agency_id");
    auto const name = agency.column("agency_name");
    auto const url = agency.column("agency_url");
    auto const tz = agency.column("agency_timezone");
    for (auto r = 1U; r <= agency.size(); ++r) {
      f.agencies.push_back(Agency{agency.get(r, id), agency.at(r, name), agency.at(r, url), agency.at(r, tz)});
    }
  }
  {
    auto const id = stops.column("stop_id");
    auto const name = stops.optional_column("stop_name");
    auto const lat = stops.column("stop_lat");
    auto const lon = stops.column("stop_lon");
    for (auto r = 1U; r <= stops.size(); ++r) {
      f.stops.push_back(
          Stop{stops.at(r, id), stops.get(r, name), GeoPoint{stops.number<double>(r, lat), stops.number<double>(r, lon)}});
    }
  }
  {
    auto const id = routes.column("route_id");
    auto const agency_id = routes.optional_column("agency_id");
    auto const short_name = routes.optional_column("route_short_name");
    auto const type = routes.column("route_type");
    for (auto r = 1U; r <= routes.size(); ++r) {
      auto ref = routes.get(r, agency_id);
      if (ref.empty() && f.agencies.size() == 1) {
        ref = f.agencies[0].agency_id;
      }
      f.routes.push_back(Route{routes.at(r, id), ref, routes.get(r, short_name), routes.number<int>(r, type)});
    }
  }
  {
    auto const id = calendar.column("service_id");
    std::array<std::size_t, 7> days{};
    for (auto i = 0U; i < days.size(); ++i) {
      days[i] = calendar.column(kWeekdayColumns[i]);
    }
    auto const start = calendar.column("start_date");
    auto const end = calendar.column("end_date");
    for (auto r = 1U; r <= calendar.size(); ++r) {
      Service s;
      s.service_id = calendar.at(r, id);
      for (auto i = 0U; i < days.size(); ++i) {
        s.weekdays[i] = calendar.flag(r, days[i]);
      }
      s.start_date = calendar.date(r, start);
      s.end_date = calendar.date(r, end);
      f.services.push_back(std::move(s));
    }
  }
  {
    auto const id = trips.column("trip_id");
    auto const route = trips.column("route_id");
    auto const service = trips.column("service_id");
    auto const headsign = trips.optional_column("trip_headsign");
    for (auto r = 1U; r <= trips.size(); ++r) {
      f.trips.push_back(Trip{trips.at(r, id), trips.at(r, route), trips.at(r, service), trips.get(r, headsign)});
    }
  }
  {
    auto const trip = stop_times.column("trip_id");
    auto const stop = stop_times.column("stop_id");
    auto const seq = stop_times.column("stop_sequence");
    auto const arr = stop_times.column("arrival_time");
    auto const dep = stop_times.column("departure_time");
    for (auto r = 1U; r <= stop_times.size(); ++r) {
      f.stop_times.push_back(StopTime{stop_times.at(r, trip), stop_times.at(r, stop), stop_times.number<int>(r, seq),
                                      stop_times.time(r, arr), stop_times.time(r, dep)});
    }
  }
  return f;
}

template <typename Row, typename KeyFn>
std::set<std::string> keys_of(std::vector<Row> const& rows, char const* table, KeyFn key) {
  std::set<std::string> out;
  for (auto i = 0U; i < rows.size(); ++i) {
    if (!out.insert(key(rows[i])).second) {
      throw GtfsError{Kind::malformed_row, std::string{table} + " row " + std::to_string(i + 1) +
                                               ": duplicate key '" + key(rows[i]) + "'",
                      table, i + 1};
    }
  }
  return out;
}

void check_ref(std::set<std::string> const& targets, std::string const& value, char const* table, std::size_t row,
               char const* column, char const* target_table) {
  if (!targets.contains(value)) {
    throw GtfsError{Kind::referential_violation,
                    std::string{table} + " row " + std::to_string(row) + ": " + column + " '" + value +
                        "' not found in " + target_table,
                    table, row};
  }
}

}  // namespace

int parse_gtfs_time(std::string_view text) {
  auto bad = [&]() -> GtfsError {
    return GtfsError{Kind::bad_time_format, "bad GTFS time '" + std::string{text} + "'"};
  };
  auto const c1 = text.find(':');
  if (c1 == std::string_view::npos || c1 == 0 || text.size() != c1 + 6 || text[c1 + 3] != ':') {
    throw bad();
  }
  auto const digits = [](std::string_view s) {
    return !s.empty() && std::all_of(begin(s), end(s), [](char c) { return c >= '0' && c <= '9'; });
  };
  auto const h = text.substr(0, c1);
  auto const m = text.substr(c1 + 1, 2);
  auto const s = text.substr(c1 + 4, 2);
  if (!digits(h) || !digits(m) || !digits(s) || h.size() > 6) {
    throw bad();
  }
  auto const hours = *parse_number<int>(h);
  auto const minutes = *parse_number<int>(m);
  auto const seconds = *parse_number<int>(s);
  if (minutes > 59 || seconds > 59) {
    throw bad();
  }
  return hours * 3600 + minutes * 60 + seconds;
}

std::string format_gtfs_time(int seconds) {
  if (seconds < 0) {
    throw GtfsError{Kind::bad_time_format, "negative GTFS time " + std::to_string(seconds)};
  }
  auto two = [](int v) { return std::string(v < 10 ? "0" : "") + std::to_string(v); };
  return two(seconds / 3600) + ":" + two(seconds / 60 % 60) + ":" + two(seconds % 60);
}

void canonicalize(GtfsFeed& f) {
  auto by = [](auto key) { return [key](auto const& a, auto const& b) { return key(a) < key(b); }; };
  std::stable_sort(begin(f.agencies), end(f.agencies), by([](Agency const& a) { return a.agency_id; }));
  std::stable_sort(begin(f.stops), end(f.stops), by([](Stop const& s) { return s.stop_id; }));
  std::stable_sort(begin(f.routes), end(f.routes), by([](Route const& r) { return r.route_id; }));
  std::stable_sort(begin(f.services), end(f.services), by([](Service const& s) { return s.service_id; }));
  std::stable_sort(begin(f.trips), end(f.trips), by([](Trip const& t) { return t.trip_id; }));
  std::stable_sort(begin(f.stop_times), end(f.stop_times),
                   by([](StopTime const& s) { return std::tie(s.trip_ref, s.stop_sequence); }));
}

void validate_feed(GtfsFeed const& f) {
  auto const agencies = keys_of(f.agencies, "agency.txt", [](Agency const& a) { return a.agency_id; });
  auto const stops = keys_of(f.stops, "stops.txt", [](Stop const& s) { return s.stop_id; });
  auto const routes = keys_of(f.routes, "routes.txt", [](Route const& r) { return r.route_id; });
  auto const services = keys_of(f.services, "calendar.txt", [](Service const& s) { return s.service_id; });
  auto const trips = keys_of(f.trips, "trips.txt", [](Trip const& t) { return t.trip_id; });
  keys_of(f.stop_times, "stop_times.txt",
          [](StopTime const& s) { return s.trip_ref + "\x1f" + std::to_string(s.stop_sequence); });

  for (auto i = 0U; i < f.routes.size(); ++i) {
    check_ref(agencies, f.routes[i].agency_ref, "routes.txt", i + 1, "agency_id", "agency.txt");
  }
  for (auto i = 0U; i < f.trips.size(); ++i) {
    check_ref(routes, f.trips[i].route_ref, "trips.txt", i + 1, "route_id", "routes.txt");
    check_ref(services, f.trips[i].service_ref, "trips.txt", i + 1, "service_id", "calendar.txt");
  }
  for (auto i = 0U; i < f.stop_times.size(); ++i) {
    check_ref(trips, f.stop_times[i].trip_ref, "stop_times.txt", i + 1, "trip_id", "trips.txt");
    check_ref(stops, f.stop_times[i].stop_ref, "stop_times.txt", i + 1, "stop_id", "stops.txt");
  }
  for (auto i = 0U; i < f.services.size(); ++i) {
    if (f.services[i].end_date < f.services[i].start_date) {
      throw GtfsError{Kind::malformed_row, "calendar.txt row " + std::to_string(i + 1) + ": start_date after end_date",
                      "calendar.txt", i + 1};
    }
  }
}

GtfsFeed read_feed(std::string_view zip_bytes) {
  ZipArchive zip;
  try {
    zip = read_zip(zip_bytes);
  } catch (ZipError const& e) {
    throw GtfsError{Kind::bad_archive, e.what()};
  }
  auto f = parse_tables(zip);
  validate_feed(f);
  canonicalize(f);
  if (!zip.comment.empty()) {
    f.feed_version = zip.comment;
  }
  return f;
}

std::string write_feed(GtfsFeed const& input) {
  auto f = input;
  canonicalize(f);

  std::vector<CsvRow> agency{{"agency_id", "agency_name", "agency_url", "agency_timezone"}};
  for (auto const& a : f.agencies) {
    agency.push_back({a.agency_id, a.name, a.url, a.timezone});
  }
  std::vector<CsvRow> stops{{"stop_id", "stop_name", "stop_lat", "stop_lon"}};
  for (auto const& s : f.stops) {
    stops.push_back({s.stop_id, s.name, ngsi::format_double(s.location.lat), ngsi::format_double(s.location.lon)});
  }
  std::vector<CsvRow> routes{{"route_id", "agency_id", "route_short_name", "route_type"}};
  for (auto const& r : f.routes) {
    routes.push_back({r.route_id, r.agency_ref, r.short_name, std::to_string(r.route_type)});
  }
  std::vector<CsvRow> trips{{"trip_id", "route_id", "service_id", "trip_headsign"}};
  for (auto const& t : f.trips) {
    trips.push_back({t.trip_id, t.route_ref, t.service_ref, t.headsign});
  }
  std::vector<CsvRow> stop_times{{"trip_id", "stop_id", "stop_sequence", "arrival_time", "departure_time"}};
  for (auto const& s : f.stop_times) {
    stop_times.push_back({s.trip_ref, s.stop_ref, std::to_string(s.stop_sequence), format_gtfs_time(s.arrival_time),
                          format_gtfs_time(s.departure_time)});
  }
  CsvRow calendar_header{"service_id"};
  calendar_header.insert(end(calendar_header), begin(kWeekdayColumns), end(kWeekdayColumns));
  calendar_header.insert(end(calendar_header), {"start_date", "end_date"});
  std::vector<CsvRow> calendar{calendar_header};
  for (auto const& s : f.services) {
    CsvRow row{s.service_id};
    for (auto const d : s.weekdays) {
      row.push_back(d ? "1" : "0");
    }
    row.push_back(s.start_date.str());
    row.push_back(s.end_date.str());
    calendar.push_back(std::move(row));
  }

  ZipArchive zip;
  zip.members = {{"agency.txt", write_csv(agency)},         {"stops.txt", write_csv(stops)},
                 {"routes.txt", write_csv(routes)},         {"trips.txt", write_csv(trips)},
                 {"stop_times.txt", write_csv(stop_times)}, {"calendar.txt", write_csv(calendar)}};
  zip.comment = f.feed_version.value_or("");
  return write_zip(zip);
}

bool feed_valid_on(GtfsFeed const& feed, ServiceDate const& date) {
  return std::any_of(begin(feed.services), end(feed.services),
                     [&](Service const& s) { return s.start_date <= date && date <= s.end_date; });
}

std::optional<std::pair<ServiceDate, ServiceDate>> feed_date_span(GtfsFeed const& feed) {
  if (feed.services.empty()) {
    return std::nullopt;
  }
  auto span = std::pair{feed.services[0].start_date, feed.services[0].end_date};
  for (auto const& s : feed.services) {
    span.first = std::min(span.first, s.start_date);
    span.second = std::max(span.second, s.end_date);
  }
  return span;
}

}  // namespace atomic::gtfs
