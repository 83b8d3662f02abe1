#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fgl/checkpoint.hpp"
#include "fgl/ops.hpp"
#include "fgl/rng.hpp"

using namespace fgl;
using namespace fgl::nn;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("checkpoint round-trips parameter tensors bit-exactly") {
    Rng rng(101);
    Params params;
    Tensor a = Tensor::zeros({3, 4});
    for (double& v : a.data) v = rng.normal();
    Tensor b = Tensor::zeros({7});
    for (double& v : b.data) v = rng.normal();
    params.create("enc/w", a, true);
    params.create("enc/b", b, false);

    const std::string path = temp_path("fgl_ckpt_test.fgl");
    save_checkpoint(path, params);

    Params loaded;
    loaded.create("enc/w", Tensor::zeros({3, 4}), true);
    loaded.create("enc/b", Tensor::zeros({7}), false);
    load_checkpoint(path, loaded);
    CHECK(loaded.get("enc/w")->value.data == a.data);
    CHECK(loaded.get("enc/b")->value.data == b.data);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects a bad magic header") {
    const std::string path = temp_path("fgl_bad_magic.fgl");
    std::ofstream(path) << "NOPE this is not a checkpoint";
    CHECK_THROWS_AS(read_checkpoint(path), FormatError);
    std::remove(path.c_str());
}

TEST_CASE("loading a checkpoint missing a parameter fails") {
    Params params;
    params.create("only/one", Tensor::zeros({2}), true);
    const std::string path = temp_path("fgl_missing.fgl");
    save_checkpoint(path, params);

    Params wants_more;
    wants_more.create("only/one", Tensor::zeros({2}), true);
    wants_more.create("other", Tensor::zeros({2}), true);
    CHECK_THROWS_AS(load_checkpoint(path, wants_more), FormatError);

    // extra tensors in the file are fine
    Params subset;
    subset.create("only/one", Tensor::zeros({2}), true);
    load_checkpoint(path, subset);
    std::remove(path.c_str());
}
