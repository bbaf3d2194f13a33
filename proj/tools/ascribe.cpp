// Copyright 2026 The Ascribe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ascribe: session server, batch pipeline and asset listing.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <boost/asio/signal_set.hpp>
#include <spdlog/spdlog.h>

#include "ascribe/assets.hpp"
#include "ascribe/error.hpp"
#include "ascribe/json.hpp"
#include "ascribe/log.hpp"
#include "ascribe/pipeline.hpp"
#include "ascribe/server/server.hpp"

namespace {

namespace fs = std::filesystem;
using ascribe::json;

/// Failures go to stderr as one JSON line.
int fail(std::string_view code, std::string_view message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << "\n";
  return 1;
}

int fail(const ascribe::Error& e) { return fail(ascribe::to_string(e.code()), e.what()); }

struct PipelineOverrides {
  std::optional<std::uint32_t> iterations;
  std::optional<double> kappa;
  std::optional<double> lambda;
  std::optional<double> threshold_lo;
  std::optional<double> threshold_hi;
  std::optional<std::uint32_t> smooth_iterations;
  std::optional<double> smooth_lambda;
  std::optional<std::string> format;
};

int run_pipeline_command(const fs::path& config_file, std::optional<fs::path> out_dir, const PipelineOverrides& o) {
  auto cfg = ascribe::load_pipeline_config(config_file);
  auto& p = cfg.params;
  if (o.iterations) p.diffusion.iterations = *o.iterations;
  if (o.kappa) p.diffusion.kappa = *o.kappa;
  if (o.lambda) p.diffusion.lambda = *o.lambda;
  if (o.threshold_lo) p.threshold_lo = *o.threshold_lo;
  if (o.threshold_hi) p.threshold_hi = *o.threshold_hi;
  if (o.smooth_iterations) p.smooth_iterations = *o.smooth_iterations;
  if (o.smooth_lambda) p.smooth_lambda = *o.smooth_lambda;
  if (o.format) cfg.format = *o.format == "obj" ? ascribe::ExportFormat::Obj : ascribe::ExportFormat::Stl;

  const fs::path out = out_dir.value_or(fs::path("pipeline_out"));
  spdlog::info("loading stack {}", cfg.stack_dir.string());
  const auto volume = ascribe::load_stack_dir(cfg.stack_dir);
  spdlog::info("volume {}x{}x{}", volume.dims.nx, volume.dims.ny, volume.dims.nz);
  const auto result = ascribe::run_pipeline(volume, p);
  ascribe::write_pipeline_outputs(result, p, cfg.format, out);
  std::cout << json{{"components", result.component_count}, {"out", out.string()}}.dump() << "\n";
  return 0;
}

int run_serve_command(const fs::path& assets_dir, const ascribe::server::ServerConfig& config) {
  auto assets = std::make_shared<ascribe::DirectoryAssetSource>(assets_dir);
  boost::asio::io_context io;
  ascribe::server::Server server(io, assets, config);
  server.start();
  std::cout << json{{"listening", config.bind}, {"port", server.port()}}.dump() << std::endl;
  boost::asio::signal_set signals(io, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int sig) {
    spdlog::info("signal {}, shutting down", sig);
    server.stop();
    io.stop();
  });
  io.run();
  return 0;
}

int run_assets_list(const fs::path& assets_dir, bool as_json) {
  const auto entries = ascribe::scan_assets(assets_dir);
  if (as_json) {
    std::cout << json(entries).dump() << "\n";
    return 0;
  }
  for (const auto& e : entries) {
    std::cout << ascribe::to_string(e.kind) << '\t' << e.size_bytes << '\t';
    if (e.kind == ascribe::AssetKind::ImageStack) std::cout << e.slice_count;
    else std::cout << '-';
    std::cout << '\t' << e.name << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  ascribe::log::configure_from_env();

  CLI::App app{"ascribe: collaborative scientific-scene server and batch pipeline"};
  app.require_subcommand(1);

  auto* serve = app.add_subcommand("serve", "host a collaborative session");
  std::string assets_dir;
  ascribe::server::ServerConfig server_config;
  std::string viewer_dir;
  server_config.port = 8080;
  serve->add_option("--assets-dir", assets_dir, "directory of importable assets")->required();
  serve->add_option("--bind", server_config.bind, "listen address")->capture_default_str();
  serve->add_option("--port", server_config.port, "listen port (0 picks one)")->capture_default_str();
  serve->add_option("--session-token", server_config.token, "shared secret clients must present")->required();
  serve->add_flag("--recenter-imports", server_config.recenter_imports,
                  "place imported meshes 1.5 m in front of the spawn point");
  serve->add_option("--viewer-dir", viewer_dir, "static files served under /viewer");

  auto* pipeline = app.add_subcommand("pipeline", "run filter, segment, quantify and export on a stack");
  std::string config_file;
  std::string out_dir;
  PipelineOverrides overrides;
  pipeline->add_option("--config", config_file, "pipeline JSON config")->required();
  pipeline->add_option("--out", out_dir, "output directory (default ./pipeline_out)");
  pipeline->add_option("--iterations", overrides.iterations, "diffusion iterations");
  pipeline->add_option("--kappa", overrides.kappa, "diffusion edge threshold");
  pipeline->add_option("--lambda", overrides.lambda, "diffusion step (<= 1/6)");
  pipeline->add_option("--threshold-lo", overrides.threshold_lo, "lower segmentation bound");
  pipeline->add_option("--threshold-hi", overrides.threshold_hi, "upper segmentation bound");
  pipeline->add_option("--smooth-iterations", overrides.smooth_iterations, "Laplacian smoothing steps");
  pipeline->add_option("--smooth-lambda", overrides.smooth_lambda, "Laplacian smoothing factor");
  pipeline->add_option("--format", overrides.format, "mesh export format")->check(CLI::IsMember({"stl", "obj"}));

  auto* assets = app.add_subcommand("assets", "asset catalog tools");
  assets->require_subcommand(1);
  auto* list = assets->add_subcommand("list", "print the importable assets");
  std::string list_dir;
  bool list_json = false;
  list->add_option("--assets-dir", list_dir, "asset root")->required();
  list->add_flag("--json", list_json, "print a JSON array");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      if (!viewer_dir.empty()) server_config.viewer_dir = viewer_dir;
      return run_serve_command(assets_dir, server_config);
    }
    if (*pipeline) {
      return run_pipeline_command(config_file, out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir),
                                  overrides);
    }
    if (*list) return run_assets_list(list_dir, list_json);
  } catch (const ascribe::Error& e) {
    return fail(e);
  } catch (const boost::system::system_error& e) {
    return fail("IoError", e.what());
  } catch (const std::exception& e) {
    return fail("InternalError", e.what());
  }
  return 0;
}
