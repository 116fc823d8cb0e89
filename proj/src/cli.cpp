#include "soilfuse/cli.hpp"

#include "soilfuse/dataset.hpp"
#include "soilfuse/fuse.hpp"
#include "soilfuse/render.hpp"
#include "soilfuse/schema_io.hpp"
#include "soilfuse/service.hpp"
#include "soilfuse/standardize.hpp"
#include "soilfuse/text.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>

namespace soilfuse {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void fnv_update(std::uint64_t& h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
}

void digest_path(std::uint64_t& h, const fs::path& p) {
    if (fs::is_directory(p)) {
        std::vector<fs::path> entries;
        for (const auto& e : fs::directory_iterator(p)) {
            // run manifests carry wall-clock timings
            if (e.path().filename().string().ends_with(".manifest.json")) continue;
            entries.push_back(e.path());
        }
        std::sort(entries.begin(), entries.end());
        for (const auto& e : entries) {
            fnv_update(h, e.filename().string());
            digest_path(h, e);
        }
    } else if (fs::is_regular_file(p)) {
        fnv_update(h, text::read_file(p.string()));
    }
}

} // namespace

std::string config_digest(const std::string& command, const std::map<std::string, std::string>& flags,
                          const std::vector<std::string>& inputs) {
    std::uint64_t h = 14695981039346656037ull;
    fnv_update(h, command);
    for (const auto& [k, v] : flags) {
        fnv_update(h, k);
        fnv_update(h, "=");
        fnv_update(h, v);
        fnv_update(h, ";");
    }
    for (const auto& in : inputs) digest_path(h, in);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string write_manifest(const RunManifest& m) {
    json j{{"command", m.command}, {"inputs", m.inputs},        {"flags", m.flags},
           {"config_digest", m.config_digest}, {"outputs", m.outputs}, {"report", m.report},
           {"elapsed_ms", m.elapsed_ms}};
    return j.dump(2) + "\n";
}

namespace {

using Clock = std::chrono::steady_clock;

struct Run {
    RunManifest manifest;
    Clock::time_point start = Clock::now();

    void finish(const std::string& manifest_path) {
        manifest.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        text::write_file(manifest_path, write_manifest(manifest));
    }
};

Run begin(const std::string& command, std::map<std::string, std::string> flags, std::vector<std::string> inputs) {
    Run r;
    r.manifest.command = command;
    r.manifest.flags = std::move(flags);
    r.manifest.inputs = std::move(inputs);
    r.manifest.config_digest = config_digest(command, r.manifest.flags, r.manifest.inputs);
    return r;
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

int cmd_standardize(const std::string& in, const std::string& spec, const std::string& out_dir, std::ostream& out) {
    Run run = begin("standardize", {{"in", in}, {"spec", spec}, {"out", out_dir}}, {in, spec});
    const auto schemas = load_schema_dir(spec);
    const auto codebooks = load_codebook_dir(spec);
    fs::create_directories(out_dir);
    const fs::path src(in), dst(out_dir);
    std::string report = "standardize report\n";
    auto emit = [&](const fs::path& p, std::string_view contents) {
        text::write_file(p.string(), contents);
        run.manifest.outputs.push_back(p.string());
    };
    for (const auto& schema : schemas) {
        std::vector<Issue> issues;
        if (schema.kind == SourceKind::SampleStructured) {
            RawTable raw = parse_raw_table(text::read_file((src / schema.source_file).string()));
            StandardizeResult res = standardize_table(raw, schema, codebooks);
            issues = res.issues;
            StandardizedTable table = make_standardized_table(schema, std::move(res.records));
            emit(dst / (schema.dataset_id + ".csv"), write_standardized_csv(table));
            emit(dst / (schema.dataset_id + ".meta.json"), write_standardized_sidecar(table));
            report += schema.dataset_id + ": " + std::to_string(table.records.size()) + " records, " +
                      std::to_string(res.input_cells) + " cells, " + std::to_string(res.declared_missing) +
                      " declared missing, " + std::to_string(issues.size()) + " issues\n";
        } else {
            for (const auto& cm : schema.column_maps) {
                const auto& name = cm.source_columns.front();
                RasterGrid grid = standardize_raster(parse_portable_raster(text::read_file((src / name).string())), cm, &issues);
                emit(dst / (schema.dataset_id + "__" + name), write_portable_raster(grid));
                emit(dst / (schema.dataset_id + "__" + name + ".svg"), render_raster_svg(grid));
                report += schema.dataset_id + "/" + name + ": " + std::to_string(grid.data_cell_count()) +
                          " data cells of " + std::to_string(grid.values().size()) + "\n";
            }
            report += schema.dataset_id + ": " + std::to_string(issues.size()) + " issues\n";
        }
        emit(dst / (schema.dataset_id + ".issues.csv"), write_issue_report(issues));
    }
    if (fs::exists(src / "assets.csv")) emit(dst / "assets.csv", text::read_file((src / "assets.csv").string()));
    const fs::path report_path = dst / "standardize_report.txt";
    emit(report_path, report);
    run.manifest.report = report_path.string();
    run.finish((dst / "standardize.manifest.json").string());
    out << report;
    return 0;
}

int cmd_fuse(const std::string& std_dir, const std::string& schema_dir, const std::string& out_path, std::ostream& out) {
    Run run = begin("fuse", {{"std", std_dir}, {"schemas", schema_dir}, {"out", out_path}}, {std_dir, schema_dir});
    const auto schemas = load_schema_dir(schema_dir);
    CorpusResult result = fuse_directory(std_dir, schemas);
    ensure_parent(out_path);
    text::write_file(out_path, export_dictionary(result.table));
    const std::string report_txt = out_path + ".report.txt";
    const std::string report_csv = out_path + ".report.csv";
    const std::string report = write_fusion_report_text(result);
    text::write_file(report_txt, report);
    text::write_file(report_csv, write_fusion_report_csv(result));
    run.manifest.outputs = {out_path, report_txt, report_csv};
    run.manifest.report = report_txt;
    run.finish(out_path + ".manifest.json");
    out << report;
    return 0;
}

FusedTable load_fused(const std::string& path) { return import_dictionary(text::read_file(path)); }

int cmd_stats(const std::string& fused, const std::string& out_dir, std::ostream& out) {
    Run run = begin("stats", {{"fused", fused}, {"out", out_dir}}, {fused});
    const FusedTable table = load_fused(fused);
    const AvailabilityStats stats = compute_availability(table);
    fs::create_directories(out_dir);
    const fs::path d(out_dir);
    auto emit = [&](const fs::path& p, std::string_view contents) {
        text::write_file(p.string(), contents);
        run.manifest.outputs.push_back(p.string());
    };

    std::string per_feature = text::csv_line({"feature_id", "theme", "availability"});
    for (const auto& f : table.features()) {
        per_feature += text::csv_line({f.id, f.theme, text::format_double(stats.per_feature.at(f.id))});
    }
    emit(d / "availability.csv", per_feature);

    LabeledMatrix m;
    std::set<std::string> themes, surveys;
    for (const auto& [key, v] : stats.matrix) {
        themes.insert(key.first);
        surveys.insert(key.second);
    }
    m.row_labels.assign(themes.begin(), themes.end());
    m.col_labels.assign(surveys.begin(), surveys.end());
    for (const auto& theme : m.row_labels) {
        std::vector<double> row;
        for (const auto& survey : m.col_labels) row.push_back(stats.matrix.at({theme, survey}));
        m.values.push_back(std::move(row));
    }
    emit(d / "availability_matrix.csv", heatmap_csv(m));
    emit(d / "availability_matrix.svg", render_heatmap_svg(m));

    std::string hist = text::csv_line({"bin_low", "bin_high", "count"});
    for (std::size_t i = 0; i < stats.histogram.size(); ++i) {
        hist += text::csv_line({text::format_double(stats.bin_edges[i]), text::format_double(stats.bin_edges[i + 1]),
                                std::to_string(stats.histogram[i])});
    }
    emit(d / "availability_histogram.csv", hist);

    std::string align = text::csv_line({"feature_id", "count", "min_m", "mean_m", "max_m"});
    for (const auto& f : table.features()) {
        if (auto a = summarize_alignment(table, f.id)) {
            align += text::csv_line({f.id, std::to_string(a->count), text::format_double(a->min),
                                     text::format_double(a->mean), text::format_double(a->max)});
        } else {
            align += text::csv_line({f.id, "0", "", "", ""});
        }
    }
    emit(d / "alignment.csv", align);

    const std::string report = "samples: " + std::to_string(table.samples().size()) +
                               "\nfeatures: " + std::to_string(table.features().size()) +
                               "\nunique locations: " + std::to_string(table.location_index().size()) + "\n";
    emit(d / "stats_report.txt", report);
    run.manifest.report = (d / "stats_report.txt").string();
    run.finish((d / "stats.manifest.json").string());
    out << report;
    return 0;
}

int cmd_export(const std::string& fused, const std::string& format, const std::string& out_path,
               const std::string& asset_root, std::ostream& out, std::ostream& err) {
    Run run = begin("export", {{"fused", fused}, {"format", format}, {"out", out_path}, {"assets", asset_root}}, {fused});
    const FusedTable table = load_fused(fused);
    ensure_parent(out_path);
    if (format == "dict") {
        DictionaryOptions options;
        if (!asset_root.empty()) options.asset_root = asset_root;
        std::vector<std::string> warnings;
        text::write_file(out_path, export_dictionary(table, options, &warnings));
        for (const auto& w : warnings) err << "warning: " << w << "\n";
        run.manifest.outputs = {out_path};
    } else {
        FlatExport flat = export_flat_table(table);
        fs::path columns = fs::path(out_path);
        columns.replace_extension(".columns.json");
        text::write_file(out_path, flat.csv);
        text::write_file(columns.string(), flat.columns_json);
        run.manifest.outputs = {out_path, columns.string()};
    }
    run.finish(out_path + ".manifest.json");
    out << "exported " << table.samples().size() << " samples (" << format << ")\n";
    return 0;
}

int cmd_filter(const std::string& fused, double min_avail, double max_align, double eval_fraction, std::uint64_t seed,
               const std::string& out_dir, std::ostream& out) {
    Run run = begin("filter",
                    {{"fused", fused},
                     {"min-avail", text::format_double(min_avail)},
                     {"max-align-m", text::format_double(max_align)},
                     {"eval-fraction", text::format_double(eval_fraction)},
                     {"seed", std::to_string(seed)},
                     {"out", out_dir}},
                    {fused});
    const FusedTable table = load_fused(fused);
    FilterOptions options;
    options.min_avail = min_avail;
    options.max_align_m = max_align;
    const FilterResult filtered = filter_training_view(table, options);
    auto split = split_by_location(table, eval_fraction, seed);
    TrainingView view = build_training_view(table, filtered.kept, std::move(split));
    ZScoreResult z = fit_apply_zscore(view);
    write_training_view(z.view, z.stats, out_dir);
    const fs::path d(out_dir);
    text::write_file((d / "exclusions.csv").string(), write_exclusion_report(filtered.excluded));
    for (const char* f : {"manifest.json", "samples.csv", "numeric.csv", "numeric_mask.csv", "categorical.csv",
                          "categorical_mask.csv", "normalization.csv", "visual.csv", "exclusions.csv"}) {
        run.manifest.outputs.push_back((d / f).string());
    }
    run.manifest.report = (d / "exclusions.csv").string();
    run.finish((d / "filter.manifest.json").string());
    out << "kept " << filtered.kept.size() << " features, excluded " << filtered.excluded.size() << "\n";
    return 0;
}

int cmd_serve(const std::string& fused, const std::string& gazetteer, const std::string& regions, const std::string& host,
              int port, std::ostream& out) {
    ServiceConfig config;
    config.host = host;
    config.port = port;
    if (const char* url = std::getenv("SOILFUSE_GEOCODER_URL"); url && *url) config.geocoder_url = url;
    auto snapshot = Snapshot::make(load_fused(fused),
                                   gazetteer.empty() ? std::vector<GazetteerEntry>{} : parse_gazetteer(text::read_file(gazetteer)),
                                   regions.empty() ? std::vector<AdminRegion>{} : parse_regions(text::read_file(regions)));
    QueryService service(std::move(snapshot), config);
    out << "serving on http://" << host << ":" << port << std::endl;
    if (!service.listen()) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"soilfuse: standardize, fuse, export and serve soil-environment sample tables"};
    app.require_subcommand(1);

    std::string in, spec, out_path, std_dir, schema_dir, fused, format = "dict", assets, gazetteer, regions;
    std::string host = "127.0.0.1";
    double min_avail = 0.5, max_align = 200.0, eval_fraction = 0.1;
    std::uint64_t seed = 42;
    int port = 8080;

    auto* standardize = app.add_subcommand("standardize", "Standardize raw sources per schema");
    standardize->add_option("--in", in, "Raw source directory")->required();
    standardize->add_option("--spec", spec, "Directory of *.schema.json and *.codebook.json")->required();
    standardize->add_option("--out", out_path, "Standardized output directory")->required();

    auto* fuse = app.add_subcommand("fuse", "Execute schemas over standardized sources");
    fuse->add_option("--std", std_dir, "Standardized directory")->required();
    fuse->add_option("--schemas", schema_dir, "Schema directory")->required();
    fuse->add_option("--out", out_path, "Fused dictionary (JSON)")->required();

    auto* stats = app.add_subcommand("stats", "Availability and alignment statistics");
    stats->add_option("--fused", fused, "Fused dictionary")->required();
    stats->add_option("--out", out_path, "Output directory")->required();

    auto* exp = app.add_subcommand("export", "Dictionary or flat export");
    exp->add_option("--fused", fused, "Fused dictionary")->required();
    exp->add_option("--format", format, "dict or flat")->check(CLI::IsMember({"dict", "flat"}));
    exp->add_option("--out", out_path, "Output file")->required();
    exp->add_option("--assets", assets, "Asset root used to check image references");

    auto* filter = app.add_subcommand("filter", "Build the normalized training view");
    filter->add_option("--fused", fused, "Fused dictionary")->required();
    filter->add_option("--min-avail", min_avail, "Minimum availability")->capture_default_str();
    filter->add_option("--max-align-m", max_align, "Maximum alignment distance (m)")->capture_default_str();
    filter->add_option("--eval-fraction", eval_fraction, "Fraction of locations held out")->capture_default_str();
    filter->add_option("--seed", seed, "Split seed")->capture_default_str();
    filter->add_option("--out", out_path, "Training view directory")->required();

    auto* serve = app.add_subcommand("serve", "Serve the query API");
    serve->add_option("--fused", fused, "Fused dictionary")->required();
    serve->add_option("--gazetteer", gazetteer, "Gazetteer CSV");
    serve->add_option("--regions", regions, "Regions CSV");
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--port", port, "Port")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return 2;
    }

    try {
        if (*standardize) return cmd_standardize(in, spec, out_path, out);
        if (*fuse) return cmd_fuse(std_dir, schema_dir, out_path, out);
        if (*stats) return cmd_stats(fused, out_path, out);
        if (*exp) return cmd_export(fused, format, out_path, assets, out, err);
        if (*filter) return cmd_filter(fused, min_avail, max_align, eval_fraction, seed, out_path, out);
        if (*serve) return cmd_serve(fused, gazetteer, regions, host, port, out);
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace soilfuse
