#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fgl/error.hpp"

namespace fgl {

enum class ForgeryType { none, splicing, copy_move, removal };
enum class Label { authentic, forged };

std::string to_string(ForgeryType t);
ForgeryType forgery_type_from_string(const std::string& s);
std::string to_string(Label l);
Label label_from_string(const std::string& s);

enum class DistortionKind { resize, blur, noise, jpeg };

// One distortion step. `value` is the scale s for resize, kernel size k for
// blur, sigma (0..255 scale) for noise, and quality q for jpeg.
struct DistortionSpec {
    DistortionKind kind = DistortionKind::noise;
    double value = 0.0;

    static DistortionSpec resize(double s) { return {DistortionKind::resize, s}; }
    static DistortionSpec blur(int k) { return {DistortionKind::blur, static_cast<double>(k)}; }
    static DistortionSpec noise(double sigma) { return {DistortionKind::noise, sigma}; }
    static DistortionSpec jpeg(int q) { return {DistortionKind::jpeg, static_cast<double>(q)}; }

    std::string name() const;
    void validate() const;
};

struct ManifestEntry {
    std::string id;
    std::string image_path;
    std::string mask_path;
    Label label = Label::authentic;
    ForgeryType forgery_type = ForgeryType::none;
    std::vector<DistortionSpec> distortions;
    std::uint64_t seed = 0;
    std::string caption;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    static DatasetManifest load(const std::string& path);
    void save(const std::string& path) const;
};

struct Violation {
    std::string entry_id;
    std::string rule;
    std::string detail;
};

// Checks the manifest invariants: unique ids, forged entries carry a mask
// with at least one positive pixel, authentic entries carry an all-zero mask
// and forgery type none. Mask paths resolve relative to `base_dir`.
// Violations are returned as data, never thrown.
std::vector<Violation> validate_manifest(const DatasetManifest& manifest, const std::string& base_dir);

std::string resolve_path(const std::string& base_dir, const std::string& path);

}  // namespace fgl
