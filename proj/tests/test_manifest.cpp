#include <doctest.h>

#include <filesystem>
#include <unistd.h>

#include "fgl/image.hpp"
#include "fgl/manifest.hpp"

using namespace fgl;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / ("fgl_manifest_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

ManifestEntry make_entry(const TempDir& dir, const std::string& id, Label label, ForgeryType type,
                         bool positive_mask) {
    BinaryMask mask = BinaryMask::zeros(16, 16);
    if (positive_mask)
        for (int i = 0; i < 16; ++i) mask.data[i] = 1;
    save_mask(mask, dir.file(id + "_mask.png"));
    save_image(RasterImage::filled(16, 16, 100), dir.file(id + ".png"));
    ManifestEntry e;
    e.id = id;
    e.image_path = id + ".png";
    e.mask_path = id + "_mask.png";
    e.label = label;
    e.forgery_type = type;
    e.seed = 1;
    e.caption = "test";
    return e;
}

}  // namespace

TEST_CASE("well-formed manifest has no violations and round-trips") {
    TempDir dir;
    DatasetManifest m;
    m.entries.push_back(make_entry(dir, "a1", Label::forged, ForgeryType::splicing, true));
    m.entries.push_back(make_entry(dir, "a2", Label::authentic, ForgeryType::none, false));
    CHECK(validate_manifest(m, dir.path.string()).empty());

    m.save(dir.file("manifest.json"));
    DatasetManifest back = DatasetManifest::load(dir.file("manifest.json"));
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].id == "a1");
    CHECK(back.entries[0].label == Label::forged);
    CHECK(back.entries[0].forgery_type == ForgeryType::splicing);
    CHECK(back.entries[1].forgery_type == ForgeryType::none);
    CHECK(validate_manifest(back, dir.path.string()).empty());
}

TEST_CASE("forged entry with all-zero mask is flagged") {
    TempDir dir;
    DatasetManifest m;
    m.entries.push_back(make_entry(dir, "bad", Label::forged, ForgeryType::removal, false));
    auto violations = validate_manifest(m, dir.path.string());
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].rule == "forged-needs-positive-mask");
    CHECK(violations[0].entry_id == "bad");
}

TEST_CASE("duplicate ids are flagged") {
    TempDir dir;
    DatasetManifest m;
    m.entries.push_back(make_entry(dir, "dup", Label::authentic, ForgeryType::none, false));
    m.entries.push_back(make_entry(dir, "dup", Label::authentic, ForgeryType::none, false));
    auto violations = validate_manifest(m, dir.path.string());
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].rule == "ids-unique");
}

TEST_CASE("authentic entry with forgery type or positive mask is flagged") {
    TempDir dir;
    DatasetManifest m;
    auto e = make_entry(dir, "odd", Label::authentic, ForgeryType::splicing, true);
    m.entries.push_back(e);
    auto violations = validate_manifest(m, dir.path.string());
    CHECK(violations.size() == 2);
}

TEST_CASE("distortion specs validate their parameter ranges") {
    CHECK_NOTHROW(DistortionSpec::resize(0.78).validate());
    CHECK_THROWS_AS(DistortionSpec::resize(0.0).validate(), ConfigError);
    CHECK_THROWS_AS(DistortionSpec::resize(1.5).validate(), ConfigError);
    CHECK_NOTHROW(DistortionSpec::blur(3).validate());
    CHECK_THROWS_AS(DistortionSpec::blur(4).validate(), ConfigError);
    CHECK_THROWS_AS(DistortionSpec::blur(1).validate(), ConfigError);
    CHECK_NOTHROW(DistortionSpec::noise(0.0).validate());
    CHECK_THROWS_AS(DistortionSpec::noise(-1.0).validate(), ConfigError);
    CHECK_NOTHROW(DistortionSpec::jpeg(100).validate());
    CHECK_THROWS_AS(DistortionSpec::jpeg(0).validate(), ConfigError);
    CHECK_THROWS_AS(DistortionSpec::jpeg(101).validate(), ConfigError);
}

TEST_CASE("missing mask file becomes a violation, not an exception") {
    DatasetManifest m;
    ManifestEntry e;
    e.id = "ghost";
    e.image_path = "ghost.png";
    e.mask_path = "ghost_mask.png";
    e.label = Label::forged;
    e.forgery_type = ForgeryType::splicing;
    m.entries.push_back(e);
    auto violations = validate_manifest(m, "/nonexistent/base");
    REQUIRE(!violations.empty());
    CHECK(violations[0].rule == "mask-readable");
}
