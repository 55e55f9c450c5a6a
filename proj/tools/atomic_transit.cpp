// atomic-transit: one binary for every service. Invoked through a symlink
// named after a subcommand (gtfs-fetcher, transit-router, ...) it runs that
// subcommand directly.

#include <signal.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <map>
#include <thread>

#include "atomic/common/hash.hpp"
#include "atomic/common/http_client.hpp"
#include "atomic/common/http_server.hpp"
#include "atomic/common/io.hpp"
#include "atomic/compose/fixture.hpp"
#include "atomic/compose/pipeline.hpp"
#include "atomic/estimator/http_api.hpp"
#include "atomic/fetcher/orchestrator.hpp"
#include "atomic/fetcher/remote_plugin.hpp"
#include "atomic/ngsi/broker.hpp"
#include "atomic/ngsi/http_api.hpp"
#include "atomic/ngsi2gtfs/export.hpp"
#include "atomic/router/engine.hpp"
#include "atomic/router/http_api.hpp"
#include "atomic/rt/bridge.hpp"
#include "atomic/rt/http_api.hpp"

using namespace atomic;

namespace {

constexpr int kOk = 0;
constexpr int kStageFailure = 1;
constexpr int kBadConfig = 2;

sigset_t stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

/// Blocks until SIGINT or SIGTERM, or until `timeout` when positive.
void wait_for_signal(std::chrono::seconds timeout = std::chrono::seconds{0}) {
  auto const set = stop_signals();
  if (timeout.count() <= 0) {
    int sig = 0;
    sigwait(&set, &sig);
    return;
  }
  timespec ts{static_cast<time_t>(timeout.count()), 0};
  sigtimedwait(&set, nullptr, &ts);
}

bool signal_pending() {
  auto const set = stop_signals();
  timespec ts{0, 0};
  return sigtimedwait(&set, nullptr, &ts) > 0;
}

http::ListenAddress listen_address(std::string const& text) {
  try {
    return http::ListenAddress::parse(text);
  } catch (std::exception const& e) {
    throw CLI::ValidationError{"--listen", e.what()};
  }
}

ServiceDate service_date(std::string const& text, std::string const& flag) {
  try {
    return ServiceDate::parse(text);
  } catch (std::exception const& e) {
    throw CLI::ValidationError{flag, e.what()};
  }
}

void print_json(nlohmann::json const& j) { std::cout << j.dump(2) << std::endl; }

struct BrokerArgs {
  std::string listen{"127.0.0.1:1026"};
  std::string journal;
};

int run_broker(BrokerArgs const& a) {
  auto const addr = listen_address(a.listen);
  ngsi::BrokerOptions opts;
  if (!a.journal.empty()) {
    opts.journal = a.journal;
  }
  auto broker = std::make_shared<ngsi::Broker>(opts);
  ngsi::BrokerHttpApi api{broker};
  api.start(addr.host, addr.port);
  spdlog::info("broker listening on {}", api.base_url());
  wait_for_signal();
  api.stop();
  return kOk;
}

struct FixtureArgs {
  std::uint32_t seed{1};
  std::string size{"tiny"};
  std::string out;
  std::string manifest;
  std::string load;
};

int run_fixture(FixtureArgs const& a) {
  compose::FixtureSize size;
  try {
    size = compose::parse_fixture_size(a.size);
  } catch (std::invalid_argument const& e) {
    std::cerr << e.what() << "\n";
    return kBadConfig;
  }
  auto const fx = compose::gen_fixture(a.seed, size);
  auto const entities = fx.entities_json().dump(2) + "\n";
  if (a.out.empty() && a.load.empty()) {
    std::cout << entities;
  } else if (!a.out.empty()) {
    write_file_atomic(a.out, entities);
  }
  if (!a.manifest.empty()) {
    write_file_atomic(a.manifest, fx.manifest().dump(2) + "\n");
  }
  if (!a.load.empty()) {
    ngsi::HttpBrokerClient client{a.load};
    for (auto const& e : fx.entities) {
      client.upsert(mobility::to_context(e));
    }
    spdlog::info("loaded {} entities into {}", fx.entities.size(), a.load);
  }
  return kOk;
}

struct ExportArgs {
  std::string broker;
  std::string out;
  std::string report;
  std::string register_id;
  std::string source_url;
  std::string summary;
};

int run_ngsi2gtfs(ExportArgs const& a) {
  constexpr int kInconsistent = 2;
  constexpr int kUnreachable = 3;
  ngsi::HttpBrokerClient client{a.broker};
  ngsi2gtfs::ExportOptions opts{a.out, std::nullopt, std::nullopt};
  if (!a.register_id.empty()) {
    opts.register_feed_id = a.register_id;
  }
  if (!a.source_url.empty()) {
    opts.source_url = a.source_url;
  }
  try {
    auto const s = ngsi2gtfs::run_export(client, opts);
    if (!a.report.empty()) {
      write_file_atomic(a.report, ngsi2gtfs::to_json(s.skipped).dump(2) + "\n");
    }
    if (!a.summary.empty()) {
      write_file_atomic(a.summary, ngsi2gtfs::to_json(s).dump(2) + "\n");
    }
    print_json(ngsi2gtfs::to_json(s));
    return kOk;
  } catch (ngsi2gtfs::InconsistentInput const& e) {
    std::cerr << e.what() << "\n" << e.report().summary() << "\n";
    return kInconsistent;
  } catch (ngsi::BrokerError const& e) {
    std::cerr << e.what() << "\n";
    return kUnreachable;
  } catch (std::exception const& e) {
    std::cerr << e.what() << "\n";
    return kStageFailure;
  }
}

struct FetcherArgs {
  std::string broker;
  std::string plugin;
  int poll_seconds{60};
  int poll_ms{0};
  std::string today;
  std::string listen;
};

int run_fetcher(FetcherArgs const& a) {
  fetcher::FetcherConfig cfg{a.broker, a.poll_seconds, std::nullopt, a.plugin};
  if (!a.today.empty()) {
    cfg.today_override = service_date(a.today, "--today");
  }
  try {
    cfg.validate();
  } catch (fetcher::ConfigError const& e) {
    std::cerr << e.what() << "\n";
    return kBadConfig;
  }
  ngsi::HttpBrokerClient client{cfg.broker_endpoint};
  fetcher::RemotePlugin plugin{cfg.plugin_endpoint};
  fetcher::OrchestratorOptions opts;
  opts.poll_interval = a.poll_ms > 0 ? std::chrono::milliseconds{a.poll_ms} : std::chrono::seconds{cfg.poll_interval_seconds};
  opts.today_override = cfg.today_override;
  fetcher::Orchestrator orchestrator{client, plugin, opts};
  try {
    orchestrator.start();
  } catch (std::exception const& e) {
    std::cerr << "first poll failed: " << e.what() << "\n";
    return kStageFailure;
  }
  http::HttpServer server;
  if (!a.listen.empty()) {
    auto const addr = listen_address(a.listen);
    server.routes().Get("/status", [&](httplib::Request const&, httplib::Response& res) {
      http::reply_json(res, 200, orchestrator.status_json().dump());
    });
    server.start(addr.host, addr.port);
    spdlog::info("fetcher status on {}", server.base_url());
  }
  wait_for_signal();
  server.stop();
  orchestrator.stop();
  return kOk;
}

struct BridgeArgs {
  std::string broker;
  std::string schedule;
  std::string date;
  std::string listen{"127.0.0.1:0"};
  epoch_t horizon_seconds{7200};
  std::string spool_dir;
};

int run_bridge(BridgeArgs const& a) {
  rt::ScheduleIndex schedule;
  try {
    auto const date = a.date.empty() ? ServiceDate::from_epoch(system_now()) : service_date(a.date, "--date");
    schedule = rt::ScheduleIndex::build(gtfs::read_feed(read_file(a.schedule)), date);
  } catch (CLI::Error const&) {
    throw;
  } catch (std::exception const& e) {
    std::cerr << "schedule: " << e.what() << "\n";
    return kBadConfig;
  }
  rt::BridgeOptions opts;
  opts.horizon_seconds = a.horizon_seconds;
  if (!a.spool_dir.empty()) {
    opts.spool_dir = a.spool_dir;
  }
  auto bridge = std::make_shared<rt::Bridge>(std::move(schedule), opts);
  rt::BridgeHttpApi api{bridge};
  auto const addr = listen_address(a.listen);
  api.start(addr.host, addr.port);
  ngsi::HttpBrokerClient client{a.broker};
  try {
    bridge->start(client, api.notify_url());
  } catch (std::exception const& e) {
    std::cerr << "subscribe failed: " << e.what() << "\n";
    api.stop();
    return kStageFailure;
  }
  spdlog::info("gtfs-rt bridge on {}", api.base_url());
  wait_for_signal();
  bridge->stop();
  api.stop();
  return kOk;
}

struct EstimatorArgs {
  std::string broker;
  std::vector<std::string> targets;
  epoch_t step_seconds{3600};
  epoch_t horizon_seconds{3600};
  epoch_t window_seconds{14 * 86400};
  std::int64_t cycle_ms{60000};
  std::string listen{"127.0.0.1:0"};
  std::string log;
};

int run_estimator(EstimatorArgs const& a) {
  std::vector<estimator::Target> targets;
  estimator::EstimatorOptions opts;
  try {
    for (auto const& t : a.targets) {
      targets.push_back(estimator::Target::parse(t));
    }
    opts.step_seconds = a.step_seconds;
    opts.horizon_seconds = a.horizon_seconds;
    opts.window_seconds = a.window_seconds;
    opts.cycle_interval = std::chrono::milliseconds{a.cycle_ms};
    if (!a.log.empty()) {
      opts.log_path = a.log;
    }
  } catch (std::exception const& e) {
    std::cerr << e.what() << "\n";
    return kBadConfig;
  }
  ngsi::HttpBrokerClient client{a.broker};
  std::shared_ptr<estimator::EstimatorService> service;
  try {
    service = std::make_shared<estimator::EstimatorService>(client, targets, opts);
  } catch (std::exception const& e) {
    std::cerr << e.what() << "\n";
    return kBadConfig;
  }
  estimator::EstimatorHttpApi api{service};
  auto const addr = listen_address(a.listen);
  api.start(addr.host, addr.port);
  service->start();
  spdlog::info("estimator on {}", api.base_url());
  wait_for_signal();
  service->stop();
  api.stop();
  return kOk;
}

struct RouterArgs {
  std::string listen{"127.0.0.1:8080"};
  std::string feed;
  std::string date;
  std::string realtime_url;
  std::int64_t realtime_ms{1000};
};

int run_router(RouterArgs const& a) {
  router::RouterOptions opts;
  if (!a.date.empty()) {
    opts.date = service_date(a.date, "--date");
  }
  auto engine = std::make_shared<router::RouterEngine>(opts);
  if (!a.feed.empty()) {
    try {
      auto bytes = read_file(a.feed);
      auto feed = gtfs::read_feed(bytes);
      auto const version = feed.feed_version.value_or(sha256_hex(bytes));
      engine->load_feed({std::filesystem::path{a.feed}.stem().string(), version, std::move(bytes), std::move(feed)});
    } catch (std::exception const& e) {
      std::cerr << "feed: " << e.what() << "\n";
      return kBadConfig;
    }
  }
  router::RouterHttpApi api{engine};
  auto const addr = listen_address(a.listen);
  api.start(addr.host, addr.port);
  std::unique_ptr<router::RealtimePoller> poller;
  if (!a.realtime_url.empty()) {
    poller = std::make_unique<router::RealtimePoller>(*engine, router::RealtimePoller::http_source(a.realtime_url),
                                                      std::chrono::milliseconds{a.realtime_ms});
    poller->start();
  }
  spdlog::info("router on {}", api.base_url());
  wait_for_signal();
  if (poller) {
    poller->stop();
  }
  api.stop();
  return kOk;
}

struct ComposeArgs {
  std::string config;
  std::string mode{"inproc"};
  bool once{false};
  int status_interval{0};
};

void print_status(compose::Pipeline& p) {
  for (auto const& s : p.status()) {
    std::cout << compose::format_status_line(s) << "\n";
  }
  std::cout.flush();
}

int run_compose(ComposeArgs const& a) {
  std::unique_ptr<compose::Pipeline> pipeline;
  try {
    auto const mode = compose::parse_mode(a.mode);
    auto const cfg = compose::PipelineConfig::load(a.config);
    pipeline = compose::start_pipeline(cfg, mode);
  } catch (compose::ConfigError const& e) {
    std::cerr << "bad config: " << e.what() << "\n";
    return kBadConfig;
  } catch (compose::StageFailure const& e) {
    std::cerr << e.what() << "\n";
    return kStageFailure;
  }
  for (auto const& [stage, url] : pipeline->endpoints()) {
    std::cout << stage << " " << url << "\n";
  }
  print_status(*pipeline);
  if (!a.once) {
    if (a.status_interval > 0) {
      while (!signal_pending()) {
        wait_for_signal(std::chrono::seconds{a.status_interval});
        print_status(*pipeline);
      }
    } else {
      wait_for_signal();
    }
  }
  pipeline->stop();
  return kOk;
}

/// "gtfs-fetcher", "atomic-gtfs-fetcher" and "transit-router" style names.
std::optional<std::string> subcommand_from_argv0(std::string const& argv0) {
  static std::map<std::string, std::string> const kAliases = {
      {"broker", "broker"},           {"ngsi-broker", "broker"},     {"ngsi2gtfs", "ngsi2gtfs"},
      {"gtfs-fetcher", "gtfs-fetcher"}, {"gtfs-rt-bridge", "gtfs-rt-bridge"}, {"estimator", "estimator"},
      {"router", "router"},           {"transit-router", "router"},  {"compose", "compose"},
      {"fixture", "fixture"}};
  auto name = std::filesystem::path{argv0}.filename().string();
  if (name.starts_with("atomic-") && name != "atomic-transit") {
    name = name.substr(7);
  }
  if (auto const it = kAliases.find(name); it != end(kAliases)) {
    return it->second;
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  // Blocked before any thread starts so that every thread inherits the mask
  // and sigwait sees the signal.
  auto const set = stop_signals();
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  spdlog::set_default_logger(spdlog::stderr_color_mt("atomic"));

  std::vector<std::string> args(argv, argv + argc);
  if (auto const sub = subcommand_from_argv0(args[0])) {
    args.insert(begin(args) + 1, *sub);
  }

  CLI::App app{"Desk-scale urban mobility services: context broker, GTFS tooling, realtime bridge, "
               "estimators and a transit router."};
  app.name("atomic-transit");
  app.require_subcommand(1);
  int code = kOk;

  BrokerArgs broker;
  auto* b = app.add_subcommand("broker", "NGSI context broker over HTTP");
  b->add_option("--listen", broker.listen, "host:port");
  b->add_option("--journal", broker.journal, "JSON-lines journal, replayed at startup");
  b->callback([&] { code = run_broker(broker); });

  FixtureArgs fixture;
  auto* f = app.add_subcommand("fixture", "Generate a test city");
  f->add_option("--seed", fixture.seed);
  f->add_option("--size", fixture.size)->check(CLI::IsMember({"tiny", "small"}));
  f->add_option("--out", fixture.out, "entities JSON (stdout when neither --out nor --load)");
  f->add_option("--manifest", fixture.manifest, "expected-values manifest JSON");
  f->add_option("--load", fixture.load, "broker URL to upsert the entities into");
  f->callback([&] { code = run_fixture(fixture); });

  ExportArgs exp;
  auto* n = app.add_subcommand("ngsi2gtfs", "Export broker transit entities as a GTFS zip");
  n->add_option("--broker", exp.broker)->required();
  n->add_option("--out", exp.out)->required();
  n->add_option("--report", exp.report, "write skipped entities here");
  n->add_option("--register", exp.register_id, "upsert a GtfsFeedPointer with this feed id");
  n->add_option("--source-url", exp.source_url, "pointer source URL (default file://<out>)");
  n->add_option("--summary", exp.summary, "write the export summary JSON here");
  n->callback([&] { code = run_ngsi2gtfs(exp); });

  FetcherArgs fetch;
  auto* g = app.add_subcommand("gtfs-fetcher", "Poll feed pointers and deliver valid feeds to a routing engine");
  g->add_option("--broker", fetch.broker)->required();
  g->add_option("--plugin-endpoint,--plugin", fetch.plugin)->required();
  g->add_option("--poll-seconds", fetch.poll_seconds);
  g->add_option("--poll-ms", fetch.poll_ms, "overrides --poll-seconds");
  g->add_option("--today", fetch.today, "YYYYMMDD");
  g->add_option("--listen", fetch.listen, "serve GET /status here");
  g->callback([&] { code = run_fetcher(fetch); });

  BridgeArgs bridge;
  auto* r = app.add_subcommand("gtfs-rt-bridge", "Serve GTFS-realtime built from broker notifications");
  r->add_option("--broker", bridge.broker)->required();
  r->add_option("--schedule", bridge.schedule, "GTFS zip")->required();
  r->add_option("--date", bridge.date, "YYYYMMDD (default today, UTC)");
  r->add_option("--listen", bridge.listen);
  r->add_option("--horizon-seconds", bridge.horizon_seconds);
  r->add_option("--spool-dir", bridge.spool_dir);
  r->callback([&] { code = run_bridge(bridge); });

  EstimatorArgs est;
  auto* e = app.add_subcommand("estimator", "Parking and traffic predictions");
  e->add_option("--broker", est.broker)->required();
  e->add_option("--target", est.targets, "entityId:attr:parking|traffic")->required();
  e->add_option("--step-seconds", est.step_seconds);
  e->add_option("--horizon-seconds", est.horizon_seconds);
  e->add_option("--window-seconds", est.window_seconds);
  e->add_option("--cycle-ms", est.cycle_ms);
  e->add_option("--listen", est.listen);
  e->add_option("--log", est.log, "events JSON-lines file");
  e->callback([&] { code = run_estimator(est); });

  RouterArgs route;
  auto* t = app.add_subcommand("router", "Earliest-arrival transit router");
  t->add_option("--listen", route.listen);
  t->add_option("--feed", route.feed, "GTFS zip to load at startup");
  t->add_option("--date", route.date, "YYYYMMDD planning date (default today, UTC)");
  t->add_option("--realtime-url", route.realtime_url, "GTFS-realtime trip updates to poll");
  t->add_option("--realtime-ms", route.realtime_ms);
  t->callback([&] { code = run_router(route); });

  ComposeArgs comp;
  auto* c = app.add_subcommand("compose", "Run a whole routing city service");
  c->add_option("--config", comp.config)->required();
  c->add_option("--mode", comp.mode)->check(CLI::IsMember({"inproc", "multiproc"}));
  c->add_flag("--once", comp.once, "print status and shut down");
  c->add_option("--status-interval", comp.status_interval, "seconds between status reports");
  c->callback([&] { code = run_compose(comp); });

  try {
    std::vector<char const*> cargs;
    for (auto const& s : args) {
      cargs.push_back(s.c_str());
    }
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (CLI::CallForHelp const& err) {
    return app.exit(err);
  } catch (CLI::ParseError const& err) {
    app.exit(err);
    return kBadConfig;
  } catch (std::exception const& err) {
    std::cerr << err.what() << "\n";
    return kStageFailure;
  }
  return code;
}
