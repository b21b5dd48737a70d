// Command-line front-end: learn a motif dictionary from MIDI, encode new
// music against it, parse multi-scale structure, evaluate against
// annotations, and render piano-roll SVGs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "motifcode/error.hpp"
#include "motifcode/eval.hpp"
#include "motifcode/hierarchy.hpp"
#include "motifcode/learner.hpp"
#include "motifcode/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    motif::TrainConfig train;
    motif::BatchSpec batch;
    std::vector<int> scales{20, 40, 80};
    bool learn_per_scale = false;
};

motif::Measure measure_from_string(const std::string& s) {
    if (s == "bacc") return motif::Measure::BACC;
    if (s == "zncc") return motif::Measure::ZNCC;
    if (s == "rmse") return motif::Measure::RMSE;
    throw motif::InputError("unknown measure '" + s + "' (bacc|zncc|rmse)");
}

std::string measure_to_string(motif::Measure m) {
    switch (m) {
    case motif::Measure::BACC: return "bacc";
    case motif::Measure::ZNCC: return "zncc";
    case motif::Measure::RMSE: return "rmse";
    }
    return "bacc";
}

motif::Strategy strategy_from_string(const std::string& s) {
    if (s == "greedy") return motif::Strategy::Greedy;
    if (s == "efficient") return motif::Strategy::Efficient;
    throw motif::InputError("unknown strategy '" + s + "' (greedy|efficient)");
}

json config_to_json(const RunConfig& cfg) {
    const motif::TrainConfig& t = cfg.train;
    const motif::EncoderConfig& e = t.encoder;
    json j;
    j["schema"] = "mw/1";
    j["seed"] = t.seed;
    j["epochs"] = t.epochs;
    j["n_init"] = t.n_init;
    j["init_size"] = {t.init_height, t.init_width};
    j["gamma"] = t.gamma;
    j["max_new_per_epoch"] = t.max_new_per_epoch;
    j["unused_epochs_to_drop"] = t.unused_epochs_to_drop;
    j["threads"] = t.threads;
    j["measure"] = measure_to_string(e.measure);
    j["strategy"] = e.strategy == motif::Strategy::Greedy ? "greedy" : "efficient";
    j["significance_s"] = e.significance_s;
    j["uniqueness_u"] = e.uniqueness_u;
    j["diffuse"] = {{"size", e.diffuse.kernel_size}, {"sigma", e.diffuse.sigma}};
    j["delta_bounds"] = {e.delta_bounds.max_dx, e.delta_bounds.max_dp,
                         e.delta_bounds.max_dd};
    j["refine_deltas"] = e.refine_deltas;
    json flips = json::array();
    for (motif::Flip f : e.flips) flips.push_back(static_cast<int>(f));
    j["flips"] = std::move(flips);
    j["duration_scales"] = e.duration_scales;
    j["spacing_scales"] = e.spacing_scales;
    j["max_placements"] = e.max_placements;
    j["xi"] = t.stat.xi;
    j["q_samples"] = t.stat.q_samples;
    j["batch_length_ticks"] = cfg.batch.batch_length_ticks;
    j["target_ticks_per_beat"] = cfg.batch.target_ticks_per_beat;
    j["scales"] = cfg.scales;
    j["learn_per_scale"] = cfg.learn_per_scale;
    return j;
}

void config_from_json(const json& j, RunConfig& cfg) {
    motif::TrainConfig& t = cfg.train;
    motif::EncoderConfig& e = t.encoder;
    t.seed = j.value("seed", t.seed);
    t.epochs = j.value("epochs", t.epochs);
    t.n_init = j.value("n_init", t.n_init);
    if (j.contains("init_size")) {
        t.init_height = j["init_size"].at(0).get<int>();
        t.init_width = j["init_size"].at(1).get<int>();
    }
    t.gamma = j.value("gamma", t.gamma);
    t.max_new_per_epoch = j.value("max_new_per_epoch", t.max_new_per_epoch);
    t.unused_epochs_to_drop = j.value("unused_epochs_to_drop", t.unused_epochs_to_drop);
    t.threads = j.value("threads", t.threads);
    e.threads = t.threads;
    if (j.contains("measure")) e.measure = measure_from_string(j["measure"]);
    if (j.contains("strategy")) e.strategy = strategy_from_string(j["strategy"]);
    e.significance_s = j.value("significance_s", e.significance_s);
    e.uniqueness_u = j.value("uniqueness_u", e.uniqueness_u);
    if (j.contains("diffuse")) {
        e.diffuse.kernel_size = j["diffuse"].value("size", e.diffuse.kernel_size);
        e.diffuse.sigma = j["diffuse"].value("sigma", e.diffuse.sigma);
    }
    if (j.contains("delta_bounds")) {
        e.delta_bounds.max_dx = j["delta_bounds"].at(0).get<int>();
        e.delta_bounds.max_dp = j["delta_bounds"].at(1).get<int>();
        e.delta_bounds.max_dd = j["delta_bounds"].at(2).get<int>();
    }
    e.refine_deltas = j.value("refine_deltas", e.refine_deltas);
    if (j.contains("flips")) {
        e.flips.clear();
        for (int f : j["flips"]) e.flips.push_back(static_cast<motif::Flip>(f));
    }
    if (j.contains("duration_scales"))
        e.duration_scales = j["duration_scales"].get<std::vector<double>>();
    if (j.contains("spacing_scales"))
        e.spacing_scales = j["spacing_scales"].get<std::vector<double>>();
    e.max_placements = j.value("max_placements", e.max_placements);
    t.stat.xi = j.value("xi", t.stat.xi);
    t.stat.q_samples = j.value("q_samples", t.stat.q_samples);
    cfg.batch.batch_length_ticks =
        j.value("batch_length_ticks", cfg.batch.batch_length_ticks);
    cfg.batch.target_ticks_per_beat =
        j.value("target_ticks_per_beat", cfg.batch.target_ticks_per_beat);
    if (j.contains("scales")) cfg.scales = j["scales"].get<std::vector<int>>();
    cfg.learn_per_scale = j.value("learn_per_scale", cfg.learn_per_scale);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw motif::InputError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw motif::InputError("cannot write " + path.string());
    out << content;
}

std::vector<motif::PianoRoll> ingest(const std::vector<std::string>& midi_paths,
                                     const motif::BatchSpec& spec) {
    std::vector<motif::PianoRoll> corpus;
    for (const std::string& path : midi_paths) {
        std::string bytes;
        try {
            bytes = read_file(path);
        } catch (const motif::InputError&) {
            throw motif::InputError("cannot open MIDI file " + path);
        }
        motif::MidiData data;
        try {
            data = motif::parse_midi(
                {reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()});
        } catch (const motif::InputError& e) {
            throw motif::InputError(path + ": " + e.what());
        }
        for (const std::string& w : data.warnings)
            std::cerr << "warning: " << path << ": " << w << "\n";
        auto quantized = motif::quantize(data.events, data.ticks_per_beat, spec);
        for (motif::PianoRoll& roll :
             motif::build_rolls(quantized, data.ticks_per_beat, spec))
            corpus.push_back(std::move(roll));
    }
    return corpus;
}

std::string rolls_to_json(const std::vector<motif::PianoRoll>& rolls) {
    json j;
    j["schema"] = "mw/1";
    json arr = json::array();
    for (const motif::PianoRoll& roll : rolls)
        arr.push_back(json::parse(motif::roll_to_json(roll)));
    j["rolls"] = std::move(arr);
    return j.dump();
}

std::vector<motif::PianoRoll> rolls_from_json(const std::string& text) {
    json j = json::parse(text);
    std::vector<motif::PianoRoll> rolls;
    for (const auto& jr : j.at("rolls"))
        rolls.push_back(motif::roll_from_json(jr.dump()));
    return rolls;
}

std::string codes_to_json(const std::vector<motif::SparseCode>& codes) {
    json j;
    j["schema"] = "mw/1";
    json arr = json::array();
    for (const motif::SparseCode& code : codes)
        arr.push_back(json::parse(motif::code_to_json(code)));
    j["codes"] = std::move(arr);
    return j.dump();
}

std::vector<motif::SparseCode> codes_from_json(const std::string& text,
                                               const std::vector<motif::PianoRoll>& rolls) {
    json j = json::parse(text);
    std::vector<motif::SparseCode> codes;
    for (const auto& jc : j.at("codes")) {
        int batch = jc.at("batch").get<int>();
        if (batch < 0 || batch >= static_cast<int>(rolls.size()))
            throw motif::InputError("code references batch " + std::to_string(batch) +
                                    " absent from rolls");
        codes.push_back(motif::code_from_json(jc.dump(), rolls[batch].data.rows(),
                                              rolls[batch].data.cols()));
    }
    return codes;
}

void write_template_svgs(const fs::path& dir, const motif::Dictionary& dict,
                         size_t top_n) {
    std::vector<size_t> order(dict.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (dict.usage[a] != dict.usage[b]) return dict.usage[a] > dict.usage[b];
        return a < b;
    });
    fs::create_directories(dir);
    for (size_t rank = 0; rank < order.size() && rank < top_n; ++rank) {
        const motif::Template& tpl = dict.templates[order[rank]];
        std::ostringstream name;
        name << "tpl_" << std::setw(3) << std::setfill('0') << tpl.id << ".svg";
        write_file(dir / name.str(), motif::template_svg(tpl));
    }
}

// ---------------- subcommands ----------------

int run_learn(const std::vector<std::string>& midis, const RunConfig& cfg,
              const fs::path& out) {
    std::vector<motif::PianoRoll> corpus = ingest(midis, cfg.batch);
    if (corpus.empty()) throw motif::InputError("no notes found in the input files");

    motif::TrainResult result = motif::train(corpus, cfg.train);

    fs::create_directories(out);
    write_file(out / "config.json", config_to_json(cfg).dump(2));
    write_file(out / "rolls.json", rolls_to_json(corpus));
    write_file(out / "dictionary.json", motif::dictionary_to_json(result.dictionary));
    write_file(out / "codes.json", codes_to_json(result.codes));
    write_file(out / "report.csv", motif::report_to_csv(result.report));
    write_file(out / "reference.json", result.reference.to_json());
    write_template_svgs(out / "templates", result.dictionary, 20);

    if (!result.report.epochs.empty()) {
        const motif::EpochStats& last = result.report.epochs.back();
        std::cout << "trained " << cfg.train.epochs << " epochs on " << corpus.size()
                  << " batches: rmse " << last.rmse << ", dictionary "
                  << last.dict_size << " templates / " << last.basis_total
                  << " bases, objective " << last.objective << "\n";
    }
    std::cout << "run written to " << out.string() << "\n";
    return 0;
}

int run_encode(const std::string& midi, const fs::path& dict_path,
               const RunConfig& cfg, const fs::path& out) {
    motif::Dictionary dict = motif::dictionary_from_json(read_file(dict_path));
    std::vector<motif::PianoRoll> rolls = ingest({midi}, cfg.batch);

    std::vector<motif::SparseCode> codes;
    for (size_t b = 0; b < rolls.size(); ++b) {
        codes.push_back(motif::encode(rolls[b], dict, cfg.train.encoder));
        codes.back().batch = static_cast<int>(b);
    }

    fs::create_directories(out);
    write_file(out / "rolls.json", rolls_to_json(rolls));
    write_file(out / "codes.json", codes_to_json(codes));

    motif::FrequencyHistogram hist = motif::frequency_histogram(codes);
    json jh;
    jh["schema"] = "mw/1";
    json items = json::array();
    for (const auto& [id, count] : hist.items) items.push_back({id, count});
    jh["histogram"] = std::move(items);
    jh["top3_fraction"] = hist.top3_fraction;
    write_file(out / "histogram.json", jh.dump());

    double rmse_sum = 0.0;
    long placements = 0;
    for (const motif::SparseCode& code : codes) {
        rmse_sum += code.stats.rmse;
        placements += static_cast<long>(code.placements.size());
    }
    std::cout << "encoded " << rolls.size() << " batches: " << placements
              << " placements, mean rmse "
              << (rolls.empty() ? 0.0 : rmse_sum / double(rolls.size())) << "\n";
    return 0;
}

int run_parse(const std::string& midi, const fs::path& dict_path,
              const RunConfig& cfg, const fs::path& out) {
    motif::ScaleSchedule schedule{cfg.scales};
    motif::validate_schedule(schedule);
    std::vector<motif::PianoRoll> rolls = ingest({midi}, cfg.batch);

    motif::Dictionary dict;
    std::vector<motif::Dictionary> per_scale;
    if (cfg.learn_per_scale) {
        for (int cap : cfg.scales) {
            motif::TrainConfig t = cfg.train;
            t.init_width = std::min(t.init_width, cap);
            per_scale.push_back(
                motif::filter_by_width(motif::train(rolls, t).dictionary, cap));
        }
    } else {
        dict = motif::dictionary_from_json(read_file(dict_path));
    }

    json j;
    j["schema"] = "mw/1";
    json batches = json::array();
    for (size_t b = 0; b < rolls.size(); ++b) {
        motif::Hierarchy h =
            cfg.learn_per_scale
                ? motif::parse_hierarchy(rolls[b], per_scale, schedule, cfg.train.encoder)
                : motif::parse_hierarchy(rolls[b], dict, schedule, cfg.train.encoder);
        json jb = json::parse(motif::hierarchy_to_json(h));
        jb["batch"] = static_cast<int>(b);
        batches.push_back(std::move(jb));
    }
    j["batches"] = std::move(batches);
    fs::create_directories(out);
    write_file(out / "hierarchy.json", j.dump());
    std::cout << "parsed " << rolls.size() << " batches at " << cfg.scales.size()
              << " scales\n";
    return 0;
}

int run_eval(const fs::path& run_dir, const fs::path& ann_path, const fs::path& out) {
    std::vector<motif::PianoRoll> rolls =
        rolls_from_json(read_file(run_dir / "rolls.json"));
    motif::Dictionary dict =
        motif::dictionary_from_json(read_file(run_dir / "dictionary.json"));
    std::vector<motif::SparseCode> codes =
        codes_from_json(read_file(run_dir / "codes.json"), rolls);
    for (motif::SparseCode& code : codes)
        motif::recompute_claims(code, dict, rolls[code.batch].data);

    json ja = json::parse(read_file(ann_path));
    std::vector<motif::Annotation> anns;
    if (ja.is_array())
        for (const auto& item : ja) anns.push_back(motif::annotation_from_json(item.dump()));
    else
        anns.push_back(motif::annotation_from_json(ja.dump()));

    std::vector<int> unmatched;
    for (const motif::Annotation& ann : anns) {
        bool found = false;
        for (const motif::SparseCode& code : codes) found |= (code.batch == ann.batch);
        if (!found) unmatched.push_back(ann.batch);
    }
    if (!unmatched.empty()) {
        std::string list;
        for (int b : unmatched) list += " " + std::to_string(b);
        throw motif::InputError("annotations reference batches without codes:" + list);
    }

    double sec_per_epoch = 0.0;
    if (fs::exists(run_dir / "report.csv")) {
        std::istringstream is(read_file(run_dir / "report.csv"));
        std::string line;
        std::getline(is, line);  // header
        int n = 0;
        while (std::getline(is, line)) {
            size_t pos = line.rfind(',');
            if (pos != std::string::npos) {
                sec_per_epoch += std::stod(line.substr(pos + 1));
                ++n;
            }
        }
        if (n > 0) sec_per_epoch /= n;
    }

    std::ostringstream csv;
    csv << "batch," << motif::metrics_csv_header() << "\n";
    motif::MetricsRow mean;
    int n_rows = 0;
    for (const motif::Annotation& ann : anns) {
        const motif::SparseCode* code = nullptr;
        for (const motif::SparseCode& c : codes)
            if (c.batch == ann.batch) code = &c;
        motif::MetricsRow row;
        row.iou = motif::note_iou(*code, ann, rolls[ann.batch]);
        motif::ClusterScores cs =
            motif::clustering_metrics({*code}, {ann}, {rolls[ann.batch]});
        row.homogeneity = cs.homogeneity;
        row.completeness = cs.completeness;
        row.v_measure = cs.v_measure;
        row.ari = cs.ari;
        row.rmse = code->stats.rmse;
        row.seconds_per_epoch = sec_per_epoch;
        csv << ann.batch << ',' << motif::metrics_csv_row(row) << "\n";
        mean.iou += row.iou;
        mean.homogeneity += row.homogeneity;
        mean.completeness += row.completeness;
        mean.v_measure += row.v_measure;
        mean.rmse += row.rmse;
        mean.ari += row.ari;
        ++n_rows;
    }
    if (n_rows > 0) {
        mean.iou /= n_rows;
        mean.homogeneity /= n_rows;
        mean.completeness /= n_rows;
        mean.v_measure /= n_rows;
        mean.rmse /= n_rows;
        mean.ari /= n_rows;
        mean.seconds_per_epoch = sec_per_epoch;
        csv << "mean," << motif::metrics_csv_row(mean) << "\n";
    }
    write_file(out, csv.str());
    std::cout << csv.str();
    return 0;
}

int run_render(const fs::path& input, fs::path dict_path, fs::path rolls_path,
               const fs::path& out) {
    json j = json::parse(read_file(input));
    fs::create_directories(out);
    if (j.contains("templates")) {
        motif::Dictionary dict = motif::dictionary_from_json(read_file(input));
        write_template_svgs(out, dict, dict.size());
        std::cout << "rendered " << dict.size() << " templates to " << out.string()
                  << "\n";
        return 0;
    }
    if (!j.contains("codes")) throw motif::InputError("unrecognized JSON artifact");
    if (dict_path.empty()) dict_path = input.parent_path() / "dictionary.json";
    if (rolls_path.empty()) rolls_path = input.parent_path() / "rolls.json";
    std::vector<motif::PianoRoll> rolls = rolls_from_json(read_file(rolls_path));
    motif::Dictionary dict = motif::dictionary_from_json(read_file(dict_path));
    std::vector<motif::SparseCode> codes = codes_from_json(read_file(input), rolls);
    for (motif::SparseCode& code : codes) {
        motif::recompute_claims(code, dict, rolls[code.batch].data);
        std::ostringstream name;
        name << "batch_" << std::setw(3) << std::setfill('0') << code.batch << ".svg";
        write_file(out / name.str(), motif::roll_svg(rolls[code.batch].data, &code));
    }
    std::cout << "rendered " << codes.size() << " batches to " << out.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"motifcode: motif dictionary learning and sparse coding for MIDI"};
    app.require_subcommand(1);

    std::string config_path, measure, strategy, out = "run";
    uint64_t seed = 0;
    bool seed_set = false;
    int epochs = -1;
    std::vector<int> scales;
    std::vector<std::string> midis;
    std::string dict_path, ann_path, input_path, rolls_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option_function<uint64_t>(
               "--seed", [&](uint64_t v) { seed = v; seed_set = true; }, "RNG seed")
            ->expected(1);
        cmd->add_option("--measure", measure, "bacc|zncc|rmse");
        cmd->add_option("--strategy", strategy, "greedy|efficient");
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--scales", scales, "scale schedule (max widths)");
        cmd->add_option("--out", out, "output directory");
    };

    CLI::App* learn = app.add_subcommand("learn", "learn a dictionary from MIDI files");
    learn->add_option("midi", midis, "input SMF files")->required();
    add_common(learn);

    CLI::App* encode = app.add_subcommand("encode", "sparse-code MIDI with a dictionary");
    encode->add_option("midi", input_path, "input SMF file")->required();
    encode->add_option("dictionary", dict_path, "dictionary.json")->required();
    add_common(encode);

    CLI::App* parse = app.add_subcommand("parse", "multi-scale structure parse");
    parse->add_option("midi", input_path, "input SMF file")->required();
    parse->add_option("dictionary", dict_path, "dictionary.json");
    parse->add_flag("--learn-per-scale", "train a dedicated dictionary per scale");
    add_common(parse);

    CLI::App* eval = app.add_subcommand("eval", "score a run against annotations");
    eval->add_option("run", input_path, "run directory from learn/encode")->required();
    eval->add_option("annotations", ann_path, "annotation JSON")->required();
    add_common(eval);

    CLI::App* render = app.add_subcommand("render", "draw codes or templates as SVG");
    render->add_option("input", input_path, "codes.json or dictionary.json")->required();
    render->add_option("--dict", dict_path, "dictionary.json (codes mode)");
    render->add_option("--rolls", rolls_path, "rolls.json (codes mode)");
    add_common(render);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!config_path.empty())
            config_from_json(json::parse(read_file(config_path)), cfg);
        if (seed_set) cfg.train.seed = seed;
        if (!measure.empty()) cfg.train.encoder.measure = measure_from_string(measure);
        if (!strategy.empty())
            cfg.train.encoder.strategy = strategy_from_string(strategy);
        if (epochs >= 0) cfg.train.epochs = epochs;
        if (!scales.empty()) cfg.scales = scales;
        if (parse->count("--learn-per-scale") > 0) cfg.learn_per_scale = true;

        if (*learn) return run_learn(midis, cfg, out);
        if (*encode) return run_encode(input_path, dict_path, cfg, out);
        if (*parse) {
            if (!cfg.learn_per_scale && dict_path.empty())
                throw motif::InputError("parse needs a dictionary or --learn-per-scale");
            return run_parse(input_path, dict_path, cfg, out);
        }
        if (*eval)
            return run_eval(input_path, ann_path,
                            out == "run" ? fs::path(input_path) / "metrics.csv"
                                         : fs::path(out));
        if (*render) return run_render(input_path, dict_path, rolls_path, out);
    } catch (const motif::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
