#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <mowave/config.hpp>
#include <mowave/heatmap.hpp>
#include <mowave/imaging.hpp>
#include <mowave/runner.hpp>

namespace {

void print_error(const std::exception& e, int depth = 0) {
  std::cerr << (depth == 0 ? "error: " : "  caused by: ") << e.what() << '\n';
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    print_error(inner, depth + 1);
  }
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mowave::IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw mowave::ConfigError(std::string("malformed JSON: ") + e.what(), "<document>");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving-source wave scattering simulation and direct sampling imaging"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment from a config or metadata file");
  std::string config_path;
  double scale = 0.0;
  std::string out_dir;
  long long seed = -1;
  std::string indicator;
  std::string generator;
  std::string convolution;
  bool both_methods = false;
  run->add_option("config", config_path, "Config JSON, or metadata.json of an earlier run")
      ->required();
  run->add_option("--scale", scale, "Scale N_t, mesh resolution and receiver count together")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Noise seed")->check(CLI::NonNegativeNumber);
  run->add_option("--indicator", indicator, "Indicators to compute")
      ->check(CLI::IsMember({"I1", "I2", "both"}));
  run->add_option("--generator", generator, "Data generator")
      ->check(CLI::IsMember({"bie", "approx"}));
  run->add_option("--convolution", convolution, "Convolution method for the I2 indicator")
      ->check(CLI::IsMember({"fft", "direct"}));
  run->add_flag("--both-methods", both_methods, "Also evaluate the other convolution method");

  auto* presets = app.add_subcommand("presets", "List built-in presets");
  bool show_json = false;
  std::string preset_name;
  presets->add_option("name", preset_name, "Print the full document of one preset");
  presets->add_flag("--json", show_json, "Print documents instead of summaries");

  auto* render = app.add_subcommand("render", "Render an image CSV as a PNG heatmap");
  std::string image_path;
  std::string png_path;
  int cell_px = 8;
  int margin_px = 8;
  render->add_option("image", image_path, "Image CSV written by 'run'")->required();
  render->add_option("--out", png_path, "PNG path (default: image path with .png)");
  render->add_option("--cell-px", cell_px, "Pixels per grid point")->check(CLI::PositiveNumber);
  render->add_option("--margin-px", margin_px, "Margin in pixels")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const nlohmann::json doc = read_json(config_path);
      nlohmann::json cfg_doc =
          doc.contains("mowave_metadata") ? doc.at("config") : doc;
      if (scale > 0.0) cfg_doc["scale"] = scale;
      if (!out_dir.empty()) cfg_doc["output_dir"] = out_dir;
      if (seed >= 0) cfg_doc["noise"]["seed"] = seed;
      if (indicator == "I1") cfg_doc["indicators"] = {"I1"};
      if (indicator == "I2") cfg_doc["indicators"] = {"I2tilde"};
      if (indicator == "both") cfg_doc["indicators"] = {"I1", "I2tilde"};
      if (!generator.empty()) cfg_doc["generator"] = generator;
      if (!convolution.empty()) cfg_doc["convolution"] = convolution;
      const mowave::ExperimentConfig cfg = mowave::parse_config(cfg_doc);
      mowave::RunOptions options;
      options.compute_both_methods = both_methods;
      const mowave::RunResult result = mowave::run_experiment(cfg, options);
      for (const auto& f : result.files) std::cout << f.string() << '\n';
      if (result.method_difference) {
        std::cout << "fft/direct relative difference: " << *result.method_difference << '\n';
      }
      return 0;
    }
    if (*presets) {
      if (!preset_name.empty()) {
        std::cout << mowave::preset_document(preset_name).dump(2) << '\n';
        return 0;
      }
      for (const std::string& name : mowave::preset_names()) {
        if (show_json) {
          std::cout << name << ' ' << mowave::preset_document(name).dump() << '\n';
        } else {
          std::cout << name << "  " << mowave::preset_summary(name) << '\n';
        }
      }
      return 0;
    }
    if (*render) {
      const mowave::IndicatorImage img = mowave::read_image_csv(std::filesystem::path(image_path));
      std::filesystem::path out = png_path.empty()
                                      ? std::filesystem::path(image_path).replace_extension(".png")
                                      : std::filesystem::path(png_path);
      mowave::render_heatmap(img, out, {cell_px, margin_px, nullptr});
      std::cout << out.string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    print_error(e);
    return 1;
  }
  return 0;
}
