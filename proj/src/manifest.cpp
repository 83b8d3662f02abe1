#include "fgl/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "fgl/image.hpp"

namespace fgl {

using json = nlohmann::json;

std::string to_string(ForgeryType t) {
    switch (t) {
        case ForgeryType::none: return "none";
        case ForgeryType::splicing: return "splicing";
        case ForgeryType::copy_move: return "copy-move";
        case ForgeryType::removal: return "removal";
    }
    throw ContractError("bad forgery type");
}

ForgeryType forgery_type_from_string(const std::string& s) {
    if (s == "none") return ForgeryType::none;
    if (s == "splicing") return ForgeryType::splicing;
    if (s == "copy-move") return ForgeryType::copy_move;
    if (s == "removal") return ForgeryType::removal;
    throw FormatError("unknown forgery type: " + s);
}

std::string to_string(Label l) { return l == Label::authentic ? "authentic" : "forged"; }

Label label_from_string(const std::string& s) {
    if (s == "authentic") return Label::authentic;
    if (s == "forged") return Label::forged;
    throw FormatError("unknown label: " + s);
}

std::string DistortionSpec::name() const {
    switch (kind) {
        case DistortionKind::resize: return "resize";
        case DistortionKind::blur: return "blur";
        case DistortionKind::noise: return "noise";
        case DistortionKind::jpeg: return "jpeg";
    }
    throw ContractError("bad distortion kind");
}

void DistortionSpec::validate() const {
    switch (kind) {
        case DistortionKind::resize:
            if (!(value > 0.0 && value <= 1.0)) throw ConfigError("resize scale must be in (0,1]");
            break;
        case DistortionKind::blur: {
            const int k = static_cast<int>(value);
            if (k != value || k < 3 || k % 2 == 0) throw ConfigError("blur kernel must be an odd integer >= 3");
            break;
        }
        case DistortionKind::noise:
            if (value < 0.0) throw ConfigError("noise sigma must be >= 0");
            break;
        case DistortionKind::jpeg: {
            const int q = static_cast<int>(value);
            if (q != value || q < 1 || q > 100) throw ConfigError("jpeg quality must be an integer in [1,100]");
            break;
        }
    }
}

namespace {

json spec_to_json(const DistortionSpec& d) {
    json j;
    j["kind"] = d.name();
    switch (d.kind) {
        case DistortionKind::resize: j["scale"] = d.value; break;
        case DistortionKind::blur: j["kernel"] = static_cast<int>(d.value); break;
        case DistortionKind::noise: j["sigma"] = d.value; break;
        case DistortionKind::jpeg: j["quality"] = static_cast<int>(d.value); break;
    }
    return j;
}

DistortionSpec spec_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    DistortionSpec d;
    if (kind == "resize") {
        d = DistortionSpec::resize(j.at("scale").get<double>());
    } else if (kind == "blur") {
        d = DistortionSpec::blur(j.at("kernel").get<int>());
    } else if (kind == "noise") {
        d = DistortionSpec::noise(j.at("sigma").get<double>());
    } else if (kind == "jpeg") {
        d = DistortionSpec::jpeg(j.at("quality").get<int>());
    } else {
        throw FormatError("unknown distortion kind: " + kind);
    }
    d.validate();
    return d;
}

}  // namespace

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad manifest JSON: ") + e.what());
    }
    DatasetManifest m;
    try {
        for (const auto& je : j.at("entries")) {
            ManifestEntry e;
            e.id = je.at("id").get<std::string>();
            e.image_path = je.at("image_path").get<std::string>();
            e.mask_path = je.at("mask_path").get<std::string>();
            e.label = label_from_string(je.at("label").get<std::string>());
            e.forgery_type = forgery_type_from_string(je.at("forgery_type").get<std::string>());
            for (const auto& jd : je.value("distortions", json::array())) e.distortions.push_back(spec_from_json(jd));
            e.seed = je.value("seed", std::uint64_t{0});
            e.caption = je.value("caption", std::string{});
            m.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad manifest schema: ") + e.what());
    }
    return m;
}

void DatasetManifest::save(const std::string& path) const {
    json j;
    j["entries"] = json::array();
    for (const auto& e : entries) {
        json je;
        je["id"] = e.id;
        je["image_path"] = e.image_path;
        je["mask_path"] = e.mask_path;
        je["label"] = to_string(e.label);
        je["forgery_type"] = to_string(e.forgery_type);
        je["distortions"] = json::array();
        for (const auto& d : e.distortions) je["distortions"].push_back(spec_to_json(d));
        je["seed"] = e.seed;
        je["caption"] = e.caption;
        j["entries"].push_back(std::move(je));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

std::string resolve_path(const std::string& base_dir, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

std::vector<Violation> validate_manifest(const DatasetManifest& manifest, const std::string& base_dir) {
    std::vector<Violation> out;
    std::set<std::string> ids;
    for (const auto& e : manifest.entries) {
        if (!ids.insert(e.id).second) out.push_back({e.id, "ids-unique", "duplicate entry id"});

        BinaryMask mask;
        bool have_mask = false;
        try {
            mask = load_mask(resolve_path(base_dir, e.mask_path));
            have_mask = true;
        } catch (const Error& err) {
            out.push_back({e.id, "mask-readable", err.what()});
        }

        if (e.label == Label::forged) {
            if (e.forgery_type == ForgeryType::none)
                out.push_back({e.id, "forged-needs-type", "forged entry with forgery_type none"});
            if (have_mask && mask.positive_count() == 0)
                out.push_back({e.id, "forged-needs-positive-mask", "forged entry with all-zero mask"});
        } else {
            if (e.forgery_type != ForgeryType::none)
                out.push_back({e.id, "authentic-type-none", "authentic entry with forgery_type " + to_string(e.forgery_type)});
            if (have_mask && mask.positive_count() != 0)
                out.push_back({e.id, "authentic-mask-zero", "authentic entry with positive mask pixels"});
        }
    }
    return out;
}

}  // namespace fgl
