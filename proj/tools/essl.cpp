// Copyright (c) 2026, The ESSL Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// essl: build, inspect and verify packed datasets; benchmark the loading
// pipeline; print training schedules.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 verification failure.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "essl/bench.hpp"
#include "essl/container.hpp"
#include "essl/error.hpp"
#include "essl/jpeg.hpp"
#include "essl/schedule.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kVerify = 3;

constexpr const char* kVersionText = "essl 0.1.0 (container format v1)";

// Thrown by subcommands that ran to completion but found bad data.
struct VerificationFailed {
  std::string message;
};

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw essl::IoError("cannot write " + path);
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw essl::IoError("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json summary(const std::vector<double>& v) {
  if (v.empty()) return json{{"min", 0}, {"max", 0}, {"mean", 0}};
  double total = 0;
  for (double x : v) total += x;
  return json{{"min", *std::min_element(v.begin(), v.end())},
              {"max", *std::max_element(v.begin(), v.end())},
              {"mean", total / static_cast<double>(v.size())}};
}

json header_json(const essl::container::ContainerHeader& h) {
  return json{{"magic", std::string(h.magic, 4)},
              {"version", h.version},
              {"sample_count", h.sample_count},
              {"sample_table_offset", h.sample_table_offset},
              {"payload_offset", h.payload_offset},
              {"max_resolution", h.max_resolution},
              {"quality", h.quality},
              {"build_seed", h.build_seed},
              {"alignment", h.alignment}};
}

// ------------------------------------------------------------------ build

struct BuildArgs {
  std::string src, out;
  int max_res = 500;
  int quality = 95;
  std::uint64_t seed = 0;
  int workers = 0;
};

int run_build(const BuildArgs& a) {
  essl::container::BuildSpec spec;
  spec.source = a.src;
  spec.max_resolution = a.max_res;
  spec.quality = a.quality;
  spec.seed = a.seed;
  spec.workers = a.workers;
  const auto s = essl::container::build_container(spec, a.out);
  write_output(json{{"path", a.out},
                    {"sample_count", s.sample_count},
                    {"total_bytes", s.total_bytes},
                    {"classes", s.class_count}}
                   .dump(2),
               "-");
  return kOk;
}

// ------------------------------------------------------------------ inspect

int run_inspect(const std::string& path) {
  const auto c = essl::container::Container::open(path);
  std::vector<double> widths, heights, lengths;
  std::map<std::uint32_t, std::uint64_t> per_class;
  double total = 0;
  for (std::uint64_t i = 0; i < c->size(); ++i) {
    const auto r = c->record(i);
    widths.push_back(r.width);
    heights.push_back(r.height);
    lengths.push_back(r.payload_length);
    total += r.payload_length;
    ++per_class[r.label];
  }
  json classes = json::object();
  for (const auto& [label, count] : per_class) classes[std::to_string(label)] = count;
  json payload = summary(lengths);
  payload["total"] = static_cast<std::uint64_t>(total);
  json doc{{"path", path},
           {"file_size", c->file_size()},
           {"header", header_json(c->header())},
           {"width", summary(widths)},
           {"height", summary(heights)},
           {"payload_length", payload},
           {"class_count", per_class.size()},
           {"samples_per_class", classes}};
  write_output(doc.dump(2), "-");
  return kOk;
}

// ------------------------------------------------------------------ verify

struct VerifyArgs {
  std::string file, against;
  double max_mae = 0.04;
  int size = 0;
  bool decode = false;
  int workers = 0;
};

int run_verify(const VerifyArgs& a) {
  const auto c = essl::container::Container::open(a.file);
  std::uint64_t bad = 0;
  json failures = json::array();
  for (std::uint64_t i = 0; i < c->size(); ++i) {
    try {
      const auto view = c->read(i);
      if (a.decode) {
        const auto info = essl::jpeg::read_info(view.jpeg);
        if (info.width != view.width || info.height != view.height) {
          throw essl::CorruptionError("sample " + std::to_string(i) + ": dimensions disagree with record",
                                      static_cast<std::int64_t>(i));
        }
        (void)essl::jpeg::decode_full(view.jpeg);
      }
    } catch (const essl::Error& e) {
      ++bad;
      if (failures.size() < 20) failures.push_back(e.what());
      std::cerr << "essl verify: " << e.what() << '\n';
    }
  }
  json doc{{"path", a.file}, {"samples", c->size()}, {"failed", bad}, {"errors", failures}};
  bool ok = bad == 0;
  if (!a.against.empty()) {
    const auto src = essl::bench::open_source(a.against);
    const auto dst = essl::bench::open_source(a.file);
    const auto r = essl::bench::diff_datasets(*src, *dst, a.size, a.workers);
    doc["mae"] = json{{"mean", r.mean}, {"max", r.max}, {"threshold", a.max_mae}};
    if (r.mean > a.max_mae) {
      ok = false;
      std::cerr << "essl verify: mean MAE " << r.mean << " exceeds " << a.max_mae << '\n';
    }
  }
  doc["ok"] = ok;
  write_output(doc.dump(2), "-");
  if (!ok) throw VerificationFailed{"verification failed for " + a.file};
  return kOk;
}

// ------------------------------------------------------------------ bench

struct BenchArgs {
  std::string data, stage, out, decode = "crop";
  int res = 224, batch = 256, workers = 0, warmup = 2, repeats = 1;
  std::uint64_t images = 0, seed = 0;
};

int run_bench(const BenchArgs& a) {
  essl::bench::BenchConfig cfg;
  cfg.data = a.data;
  cfg.stage = essl::bench::parse_stage(a.stage);
  cfg.res = a.res;
  cfg.batch = a.batch;
  cfg.workers = a.workers;
  cfg.images = a.images;
  cfg.seed = a.seed;
  cfg.warmup_batches = a.warmup;
  cfg.repeats = a.repeats;
  cfg.decode = a.decode == "full" ? essl::pipeline::DecodeMode::Full : essl::pipeline::DecodeMode::Crop;
  cfg.validate();
  const auto report = essl::bench::run_stage_bench(cfg);
  write_output(report.to_json(), a.out);
  return kOk;
}

struct DiffArgs {
  std::string a, b, out;
  int size = 0, workers = 0;
  bool samples = false;
};

int run_diff(const DiffArgs& d) {
  const auto a = essl::bench::open_source(d.a);
  const auto b = essl::bench::open_source(d.b);
  write_output(essl::bench::diff_datasets(*a, *b, d.size, d.workers).to_json(d.samples), d.out);
  return kOk;
}

struct SweepArgs {
  std::string src, work_dir, out;
  std::vector<int> res{256, 500, 1000};
  std::vector<int> quality{90, 95, 100};
  int workers = 0, batch = 64, repeats = 3;
  std::uint64_t seed = 0, images = 0;
  bool keep = false;
};

int run_sweep(const SweepArgs& a) {
  essl::bench::SweepConfig cfg;
  cfg.source = a.src;
  cfg.resolutions = a.res;
  cfg.qualities = a.quality;
  cfg.work_dir = a.work_dir;
  cfg.workers = a.workers;
  cfg.batch = a.batch;
  cfg.repeats = a.repeats;
  cfg.seed = a.seed;
  cfg.bench_images = a.images;
  cfg.keep_containers = a.keep;
  write_output(essl::bench::sweep_csv(essl::bench::compression_sweep(cfg)), a.out);
  return kOk;
}

// ------------------------------------------------------------------ schedule

struct ScheduleArgs {
  std::string scheme, file, emit = "json";
  int epochs = 0, patch = 16;
  bool geometry = false;
};

int run_schedule(const ScheduleArgs& a) {
  if (a.scheme.empty() == a.file.empty()) {
    throw essl::ConfigError("exactly one of --scheme or --file is required");
  }
  essl::schedule::ScheduleScheme scheme;
  int epochs = a.epochs;
  if (!a.scheme.empty()) {
    scheme = essl::schedule::builtin_scheme(a.scheme);
  } else {
    auto loaded = essl::schedule::load_json(read_text(a.file));
    scheme = loaded.scheme;
    if (epochs == 0) epochs = loaded.total_epochs;
  }
  if (epochs == 0) epochs = scheme.total_epochs;
  if (a.geometry) {
    write_output(essl::schedule::emit_geometry_csv(scheme, a.patch), "-");
  } else if (a.emit == "csv") {
    write_output(essl::schedule::emit_csv(scheme, epochs), "-");
  } else {
    write_output(essl::schedule::emit_json(scheme, epochs), "-");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packed image datasets: build, inspect, verify, benchmark, schedule.", "essl"};
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", kVersionText);
  app.require_subcommand(1);

  std::function<int()> action;

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Build a container from a class-folder tree.");
  b->add_option("--src", build.src, "Source directory (one sub-folder per class)")->required();
  b->add_option("--out", build.out, "Output container file")->required();
  b->add_option("--max-res", build.max_res, "Largest side after downscaling")->check(CLI::Range(64, 65535));
  b->add_option("--quality", build.quality, "JPEG quality")->check(CLI::Range(1, 100));
  b->add_option("--seed", build.seed, "Build seed recorded in the header");
  b->add_option("--workers", build.workers, "Encoder threads (0 = all cores)");
  b->callback([&] { action = [&] { return run_build(build); }; });

  std::string inspect_file;
  auto* in = app.add_subcommand("inspect", "Print header and per-field statistics as JSON.");
  in->add_option("file", inspect_file, "Container file")->required();
  in->callback([&] { action = [&] { return run_inspect(inspect_file); }; });

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Check every payload CRC; optionally compare pixels.");
  v->add_option("file", verify.file, "Container file")->required();
  v->add_option("--against", verify.against, "Source directory or container to diff against");
  v->add_option("--max-mae", verify.max_mae, "Largest accepted corpus-mean MAE ([0, 1] scale)");
  v->add_option("--size", verify.size, "Centre-crop side for the pixel diff (0 = none)");
  v->add_flag("--decode", verify.decode, "Also decode every payload");
  v->add_option("--workers", verify.workers, "Threads for the pixel diff");
  v->callback([&] { action = [&] { return run_verify(verify); }; });

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "Measure cumulative pipeline stage throughput.");
  be->add_option("--data", bench.data, "Container file");
  be->add_option("--stage", bench.stage, "Pipeline stage")->check(CLI::IsMember(essl::bench::stage_names()));
  be->add_option("--res", bench.res, "Output resolution");
  be->add_option("--batch", bench.batch, "Batch size");
  be->add_option("--workers", bench.workers, "Worker threads (0 = all cores)");
  be->add_option("--images", bench.images, "Measured images (default 10 batches)");
  be->add_option("--seed", bench.seed, "Sample order / crop seed");
  be->add_option("--warmup", bench.warmup, "Untimed warm-up batches (>= 2)");
  be->add_option("--repeats", bench.repeats, "Timed repetitions; the best is reported");
  be->add_option("--decode", bench.decode, "Decode path for simple/threeaug")
      ->check(CLI::IsMember({"crop", "full"}));
  be->add_option("--out", bench.out, "Report path (default stdout)");
  be->require_subcommand(0, 1);

  DiffArgs diff;
  auto* d = be->add_subcommand("diff", "Pixel MAE between two image sources.");
  d->add_option("--a", diff.a, "Directory or container")->required();
  d->add_option("--b", diff.b, "Directory or container")->required();
  d->add_option("--size", diff.size, "Centre-crop side after size matching (0 = none)");
  d->add_option("--workers", diff.workers, "Threads");
  d->add_flag("--per-sample", diff.samples, "Include per-sample errors");
  d->add_option("--out", diff.out, "Report path (default stdout)");
  d->callback([&] { action = [&] { return run_diff(diff); }; });

  SweepArgs sweep;
  auto* sw = be->add_subcommand("sweep", "Build and benchmark a resolution x quality grid (CSV).");
  sw->add_option("--src", sweep.src, "Source directory")->required();
  sw->add_option("--res", sweep.res, "Resolutions")->delimiter(',');
  sw->add_option("--quality", sweep.quality, "Qualities")->delimiter(',')->check(CLI::Range(1, 100));
  sw->add_option("--work-dir", sweep.work_dir, "Where containers are written");
  sw->add_option("--workers", sweep.workers, "Threads");
  sw->add_option("--batch", sweep.batch, "Benchmark batch size");
  sw->add_option("--images", sweep.images, "Benchmark images per cell");
  sw->add_option("--repeats", sweep.repeats, "Timed repetitions per cell");
  sw->add_option("--seed", sweep.seed, "Seed");
  sw->add_flag("--keep", sweep.keep, "Keep the built containers");
  sw->add_option("--out", sweep.out, "CSV path (default stdout)");
  sw->callback([&] { action = [&] { return run_sweep(sweep); }; });

  be->callback([&] {
    if (!be->get_subcommands().empty()) return;
    if (bench.data.empty() || bench.stage.empty()) {
      throw CLI::ValidationError("bench", "--data and --stage are required (stages: read, decode, "
                                          "crop_decode, crop_resize, resize, simple, threeaug)");
    }
    action = [&] { return run_bench(bench); };
  });

  ScheduleArgs sched;
  auto* s = app.add_subcommand("schedule", "Print a per-epoch schedule table.");
  s->add_option("--scheme", sched.scheme, "Built-in scheme")
      ->check(CLI::IsMember(essl::schedule::builtin_scheme_names()));
  s->add_option("--file", sched.file, "Custom scheme JSON");
  s->add_option("--epochs", sched.epochs, "Total epochs (default: scheme default)")->check(CLI::PositiveNumber);
  s->add_option("--emit", sched.emit, "Output format")->check(CLI::IsMember({"json", "csv"}));
  s->add_flag("--geometry", sched.geometry, "Per-stage crop geometry as CSV");
  s->add_option("--patch", sched.patch, "Patch size for the masked perceptual ratio");
  s->callback([&] { action = [&] { return run_schedule(sched); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return action ? action() : kUsage;
  } catch (const VerificationFailed& e) {
    std::cerr << "essl: " << e.message << '\n';
    return kVerify;
  } catch (const essl::ConfigError& e) {
    std::cerr << "essl: " << e.what() << '\n';
    return kUsage;
  } catch (const essl::Error& e) {
    std::cerr << "essl: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "essl: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "essl: " << e.what() << '\n';
    return kData;
  }
}
