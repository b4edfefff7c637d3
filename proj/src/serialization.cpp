#include "whdpd/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "whdpd/error.hpp"

namespace whdpd {

namespace {

void expect_schema(const Json& doc, std::string_view schema) {
    if (!doc.is_object()) throw ConfigError("expected a JSON object");
    if (doc.contains("schema") && doc.at("schema").get<std::string>() != schema)
        throw ConfigError("schema mismatch: expected " + std::string(schema) + ", found " +
                          doc.at("schema").get<std::string>());
}

template <typename F>
auto guarded(std::string_view what, F&& f) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

std::string kind_name(SaturationKind k) {
    switch (k) {
    case SaturationKind::Arctan: return "arctan";
    case SaturationKind::Tanh: return "tanh";
    case SaturationKind::Cubic: return "cubic";
    case SaturationKind::Linear: return "linear";
    }
    return "arctan";
}

SaturationKind kind_from(const std::string& s) {
    if (s == "arctan") return SaturationKind::Arctan;
    if (s == "tanh") return SaturationKind::Tanh;
    if (s == "cubic") return SaturationKind::Cubic;
    if (s == "linear") return SaturationKind::Linear;
    throw ConfigError("unknown saturation kind '" + s + "'");
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Json model_to_json(const WhModel& model) {
    Json layers = Json::array();
    for (const auto& block : model.layers()) {
        if (const auto* fir = std::get_if<FirBlock>(&block)) {
            layers.push_back({{"kind", "fir"}, {"taps", fir->taps}});
        } else {
            Json coeffs = Json::object();
            for (const auto& [order, a] : std::get<PolyNlBlock>(block).coeffs)
                coeffs[std::to_string(order)] = a;
            layers.push_back({{"kind", "poly"}, {"coeffs", coeffs}});
        }
    }
    return {{"schema", kModelSchema}, {"layers", layers}};
}

WhModel model_from_json(const Json& doc) {
    return guarded("model", [&] {
        expect_schema(doc, kModelSchema);
        std::vector<Block> layers;
        for (const auto& layer : doc.at("layers")) {
            const auto kind = layer.at("kind").get<std::string>();
            if (kind == "fir") {
                layers.emplace_back(FirBlock{layer.at("taps").get<std::vector<double>>()});
            } else if (kind == "poly") {
                PolyNlBlock poly;
                for (const auto& [key, value] : layer.at("coeffs").items()) {
                    int order = 0;
                    const auto res = std::from_chars(key.data(), key.data() + key.size(), order);
                    if (res.ec != std::errc{} || res.ptr != key.data() + key.size())
                        throw ConfigError("model: polynomial order '" + key + "' is not an integer");
                    poly.coeffs[order] = value.get<double>();
                }
                layers.emplace_back(std::move(poly));
            } else {
                throw ConfigError("model: unknown layer kind '" + kind + "'");
            }
        }
        return WhModel(std::move(layers));
    });
}

Json artifact_to_json(const DpdArtifact& artifact) {
    return {{"schema", kArtifactSchema},
            {"model", model_to_json(artifact.model)},
            {"stored_nl_input_amplitude", artifact.stored_nl_input_amplitude},
            {"training",
             {{"initial_loss", artifact.training.initial_loss},
              {"final_loss", artifact.training.final_loss},
              {"iterations", artifact.training.iterations},
              {"converged", artifact.training.converged}}}};
}

DpdArtifact artifact_from_json(const Json& doc) {
    return guarded("artifact", [&] {
        expect_schema(doc, kArtifactSchema);
        DpdArtifact artifact{model_from_json(doc.at("model")),
                             doc.at("stored_nl_input_amplitude").get<std::vector<double>>(), {}};
        if (doc.contains("training")) {
            const auto& t = doc.at("training");
            artifact.training.initial_loss = t.value("initial_loss", 0.0);
            artifact.training.final_loss = t.value("final_loss", 0.0);
            artifact.training.iterations = t.value("iterations", std::size_t{0});
            artifact.training.converged = t.value("converged", false);
        }
        validate(artifact);
        return artifact;
    });
}

TxChannel channel_preset(std::string_view name) {
    if (name == "paper-like") return TxChannel::paper_like();
    if (name == "identity") {
        TxChannel ch;
        ch.saturation.kind = SaturationKind::Linear;
        return ch;
    }
    throw ConfigError("unknown channel preset '" + std::string(name) + "'");
}

Json channel_to_json(const TxChannel& ch) {
    Json doc{{"schema", kChannelSchema},
             {"pre_fir", {{"taps", ch.pre_fir.taps}}},
             {"saturation",
              {{"kind", kind_name(ch.saturation.kind)},
               {"saturation_level", ch.saturation.saturation_level},
               {"gain", ch.saturation.gain}}},
             {"post_fir", {{"taps", ch.post_fir.taps}}},
             {"seed", ch.seed}};
    doc["dac_bits"] = ch.dac_bits ? Json(*ch.dac_bits) : Json(nullptr);
    doc["mzm"] = ch.mzm ? Json{{"v_pi", ch.mzm->v_pi}} : Json(nullptr);
    doc["noise_snr_db"] = ch.noise_snr_db ? Json(*ch.noise_snr_db) : Json(nullptr);
    doc["noise_reference_rms"] = ch.noise_reference_rms ? Json(*ch.noise_reference_rms) : Json(nullptr);
    return doc;
}

TxChannel channel_from_json(const Json& doc) {
    return guarded("channel", [&] {
        if (doc.is_string()) return channel_preset(doc.get<std::string>());
        expect_schema(doc, kChannelSchema);
        TxChannel ch = doc.contains("preset") ? channel_preset(doc.at("preset").get<std::string>())
                                              : TxChannel{};
        auto optional_field = [&](const char* key, auto& target) {
            if (!doc.contains(key)) return;
            using T = typename std::decay_t<decltype(target)>::value_type;
            if (doc.at(key).is_null())
                target.reset();
            else
                target = doc.at(key).get<T>();
        };
        optional_field("dac_bits", ch.dac_bits);
        optional_field("noise_snr_db", ch.noise_snr_db);
        optional_field("noise_reference_rms", ch.noise_reference_rms);
        if (doc.contains("pre_fir")) ch.pre_fir.taps = doc.at("pre_fir").at("taps").get<std::vector<double>>();
        if (doc.contains("post_fir")) ch.post_fir.taps = doc.at("post_fir").at("taps").get<std::vector<double>>();
        if (doc.contains("saturation")) {
            const auto& s = doc.at("saturation");
            if (s.contains("kind")) ch.saturation.kind = kind_from(s.at("kind").get<std::string>());
            ch.saturation.saturation_level = s.value("saturation_level", ch.saturation.saturation_level);
            ch.saturation.gain = s.value("gain", ch.saturation.gain);
        }
        if (doc.contains("mzm")) {
            if (doc.at("mzm").is_null())
                ch.mzm.reset();
            else
                ch.mzm = MzmSpec{doc.at("mzm").at("v_pi").get<double>()};
        }
        ch.seed = doc.value("seed", ch.seed);
        validate(ch);
        return ch;
    });
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

SampledSignal read_waveform_csv(const std::filesystem::path& path, double samples_per_symbol) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<double> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        double v = 0.0;
        const char* begin = line.data() + first;
        const char* end = line.data() + last + 1;
        const auto res = std::from_chars(begin, end, v);
        if (res.ec != std::errc{} || res.ptr != end)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": not a number");
        samples.push_back(v);
    }
    if (samples.empty()) throw ConfigError(path.string() + ": no samples");
    return SampledSignal(std::move(samples), samples_per_symbol, path.stem().string());
}

std::string waveform_to_csv(const SampledSignal& x) {
    std::string out;
    out.reserve(x.size() * 24);
    for (double v : x.samples()) {
        out += format_double(v);
        out += '\n';
    }
    return out;
}

}  // namespace whdpd
