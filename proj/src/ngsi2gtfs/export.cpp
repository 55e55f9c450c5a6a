#include "atomic/ngsi2gtfs/export.hpp"

#include "atomic/common/hash.hpp"
#include "atomic/common/io.hpp"

namespace atomic::ngsi2gtfs {

using namespace atomic::mobility;

InconsistentInput::InconsistentInput(ConsistencyReport report)
    : std::runtime_error{"inconsistent urban-mobility input:\n" + report.summary()}, report_{std::move(report)} {}

Discovery discover(ngsi::BrokerClient& broker) {
  Discovery out;
  for (auto const* type : kStaticTypes) {
    ngsi::EntityQuery q;
    q.type = type;
    for (auto const& e : broker.query(q)) {
      try {
        out.entities.push_back(from_context(e));
      } catch (ModelError const& err) {
        out.skipped.push_back(SkippedEntity{e.id, e.type, err.what()});
      }
    }
  }
  return out;
}

gtfs::GtfsFeed build_feed(std::vector<TypedEntity> const& entities) {
  std::vector<TypedEntity> statics;
  gtfs::GtfsFeed feed;
  for (auto const& e : entities) {
    std::visit(
        [&](auto const& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Agency>) {
            feed.agencies.push_back(x);
          } else if constexpr (std::is_same_v<T, Stop>) {
            feed.stops.push_back(x);
          } else if constexpr (std::is_same_v<T, Route>) {
            feed.routes.push_back(x);
          } else if constexpr (std::is_same_v<T, Service>) {
            feed.services.push_back(x);
          } else if constexpr (std::is_same_v<T, Trip>) {
            feed.trips.push_back(x);
          } else if constexpr (std::is_same_v<T, StopTime>) {
            feed.stop_times.push_back(x);
          } else {
            return;
          }
          statics.push_back(e);
        },
        e);
  }

  auto report = validate_consistency(statics);
  if (feed.agencies.empty()) {
    report.findings.push_back(Finding{Finding::Kind::invariant_violation, "", "no GtfsAgency in the input"});
  }
  if (!report.empty()) {
    throw InconsistentInput{std::move(report)};
  }
  gtfs::canonicalize(feed);
  return feed;
}

std::vector<TypedEntity> feed_entities(gtfs::GtfsFeed const& feed) {
  std::vector<TypedEntity> out;
  out.insert(end(out), begin(feed.agencies), end(feed.agencies));
  out.insert(end(out), begin(feed.stops), end(feed.stops));
  out.insert(end(out), begin(feed.routes), end(feed.routes));
  out.insert(end(out), begin(feed.services), end(feed.services));
  out.insert(end(out), begin(feed.trips), end(feed.trips));
  out.insert(end(out), begin(feed.stop_times), end(feed.stop_times));
  return out;
}

std::string content_version(gtfs::GtfsFeed const& feed) {
  auto unversioned = feed;
  unversioned.feed_version.reset();
  return sha256_hex(gtfs::write_feed(unversioned));
}

ExportSummary run_export(ngsi::BrokerClient& broker, ExportOptions const& options) {
  auto discovery = discover(broker);
  auto feed = build_feed(discovery.entities);
  feed.feed_version = content_version(feed);

  std::optional<FeedPointer> pointer;
  if (options.register_feed_id) {
    auto const span = gtfs::feed_date_span(feed);
    if (!span) {
      ConsistencyReport r;
      r.findings.push_back(Finding{Finding::Kind::invariant_violation, "",
                                   "no GtfsService to derive the feed validity period from"});
      throw InconsistentInput{std::move(r)};
    }
    std::error_code ec;
    auto const abs = std::filesystem::absolute(options.out, ec);
    pointer = FeedPointer{*options.register_feed_id,
                          options.source_url.value_or("file://" + (ec ? options.out : abs).string()),
                          *feed.feed_version, span->first, span->second};
  }

  try {
    write_file_atomic(options.out, gtfs::write_feed(feed));
  } catch (IoError const& e) {
    throw IoFailure{e.what()};
  }

  ExportSummary s;
  s.row_counts = {{"agency.txt", feed.agencies.size()},  {"stops.txt", feed.stops.size()},
                  {"routes.txt", feed.routes.size()},    {"calendar.txt", feed.services.size()},
                  {"trips.txt", feed.trips.size()},      {"stop_times.txt", feed.stop_times.size()}};
  s.skip_count = discovery.skipped.size();
  s.skipped = std::move(discovery.skipped);
  s.feed_version = *feed.feed_version;
  if (pointer) {
    auto const ctx = to_context(*pointer);
    broker.upsert(ctx);
    s.pointer_id = ctx.id;
  }
  return s;
}

nlohmann::json to_json(std::vector<SkippedEntity> const& skipped) {
  auto out = nlohmann::json::array();
  for (auto const& s : skipped) {
    out.push_back({{"id", s.id}, {"type", s.type}, {"reason", s.reason}});
  }
  return out;
}

nlohmann::json to_json(ExportSummary const& s) {
  nlohmann::json j{{"rowCounts", s.row_counts},
                   {"skipCount", s.skip_count},
                   {"skipped", to_json(s.skipped)},
                   {"feedVersion", s.feed_version}};
  if (s.pointer_id) {
    j["pointerId"] = *s.pointer_id;
  }
  return j;
}

}  // namespace atomic::ngsi2gtfs
