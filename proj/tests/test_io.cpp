#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "resiam/io.hpp"
#include "resiam/rng.hpp"
#include "resiam/tracker.hpp"

using namespace resiam;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "resiam_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

Tensor random_image(Rng& rng, int ch, int h, int w) {
    Tensor t = Tensor::zeros({ch, h, w});
    for (double& v : t.storage()) v = rng.uniform();
    return t;
}

double quantized(double v) { return std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

} // namespace

TEST_CASE("png: grayscale and color round-trips at 8-bit precision") {
    Rng rng(61);
    const auto dir = temp_dir();

    Tensor gray = random_image(rng, 1, 12, 17);
    const std::string gpath = (dir / "gray.png").string();
    write_png(gpath, gray);
    Tensor gback = read_png(gpath);
    REQUIRE(gback.same_shape(gray));
    for (std::size_t i = 0; i < gray.size(); ++i)
        CHECK(gback.storage()[i] == quantized(gray.storage()[i]));

    Tensor rgb = random_image(rng, 3, 8, 9);
    const std::string cpath = (dir / "color.png").string();
    write_png(cpath, rgb);
    Tensor cback = read_png(cpath);
    REQUIRE(cback.same_shape(rgb));
    for (std::size_t i = 0; i < rgb.size(); ++i)
        CHECK(cback.storage()[i] == quantized(rgb.storage()[i]));

    // a second write-read of the read-back image is lossless
    write_png(gpath, gback);
    Tensor again = read_png(gpath);
    CHECK(again.storage() == gback.storage());
}

TEST_CASE("png: out-of-range values clamp and bad inputs throw") {
    const auto dir = temp_dir();
    Tensor img = Tensor::zeros({1, 2, 2});
    img.at(0, 0, 0) = -0.5;
    img.at(0, 0, 1) = 1.5;
    img.at(0, 1, 0) = 0.5;
    const std::string path = (dir / "clamp.png").string();
    write_png(path, img);
    Tensor back = read_png(path);
    CHECK(back.at(0, 0, 0) == 0.0);
    CHECK(back.at(0, 0, 1) == 1.0);
    CHECK(back.at(0, 1, 0) == quantized(0.5));

    CHECK_THROWS_AS(write_png(path, Tensor::zeros({2, 4, 4})), std::invalid_argument);
    CHECK_THROWS_AS(write_png(path, Tensor::zeros({4, 4})), std::invalid_argument);
    CHECK_THROWS_AS(write_png((dir / "no_such_dir" / "x.png").string(), Tensor::zeros({1, 2, 2})),
                    std::runtime_error);
    CHECK_THROWS_AS(read_png((dir / "missing.png").string()), std::runtime_error);
}

TEST_CASE("to_gray: luma weights and pass-through") {
    Tensor rgb = Tensor::zeros({3, 1, 2});
    rgb.at(0, 0, 0) = 1.0;   // pure red
    rgb.at(1, 0, 1) = 1.0;   // pure green
    Tensor g = to_gray(rgb);
    CHECK(g.extent(0) == 1);
    CHECK(g.at(0, 0, 0) == 0.299);
    CHECK(g.at(0, 0, 1) == 0.587);

    Tensor mono = Tensor::zeros({1, 2, 2});
    mono.at(0, 1, 1) = 0.25;
    CHECK(to_gray(mono).storage() == mono.storage());

    // white maps to 1 exactly up to the weight sum
    Tensor white = Tensor::zeros({3, 1, 1});
    for (double& v : white.storage()) v = 1.0;
    CHECK(to_gray(white).at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("annotations csv: bit-exact round trip and strict parsing") {
    std::vector<FrameAnnotation> rows{
        {0, Box{10.0, 20.0, 30.0, 40.0}, 0.0},
        {1, Box{10.1, 20.0 + 1.0 / 3.0, 29.9, 40.2}, -12.75},
        {2, Box{-3.5, 0.0625, 31.0, 39.0}, 359.2},
    };
    const std::string csv = annotations_to_csv(rows);
    CHECK(csv.substr(0, 23) == "frame,x,y,w,h,angle_deg");

    std::vector<FrameAnnotation> back = annotations_from_csv(csv);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].frame == rows[i].frame);
        CHECK(back[i].box.x == rows[i].box.x);
        CHECK(back[i].box.y == rows[i].box.y);
        CHECK(back[i].box.w == rows[i].box.w);
        CHECK(back[i].box.h == rows[i].box.h);
        CHECK(back[i].angle_deg == rows[i].angle_deg);
    }

    // windows line endings are tolerated
    std::string crlf = "frame,x,y,w,h,angle_deg\r\n0,1,2,3,4,5\r\n";
    CHECK(annotations_from_csv(crlf).size() == 1);

    CHECK_THROWS_AS(annotations_from_csv(""), std::invalid_argument);
    CHECK_THROWS_AS(annotations_from_csv("x,y\n"), std::invalid_argument);
    CHECK_THROWS_AS(annotations_from_csv("frame,x,y,w,h,angle_deg\n0,1,2\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(annotations_from_csv("frame,x,y,w,h,angle_deg\n0,1,2,3,4,oops\n"),
                    std::invalid_argument);
}

TEST_CASE("results csv: parses the tracker's own output") {
    std::vector<TrackState> states;
    states.push_back(TrackState::from_box(0, Box{10.25, 20.5, 8.0, 6.0}));
    TrackState s1 = states[0];
    s1.frame = 1;
    s1.cx += 1.5;
    s1.orientation_index = 3;
    s1.orientation_deg = -90.0;
    s1.score = 0.625;
    states.push_back(s1);

    std::vector<ResultRow> rows = results_from_csv(states_to_csv(states));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].frame == 0);
    CHECK(rows[0].box.x == 10.25);
    CHECK(rows[0].box.w == 8.0);
    CHECK(rows[1].orientation_deg == -90.0);
    CHECK(rows[1].score == 0.625);
    CHECK(rows[1].box.x == doctest::Approx(11.75).epsilon(1e-15));

    CHECK_THROWS_AS(results_from_csv("frame,x,y,w,h,angle_deg\n"), std::invalid_argument);
}

TEST_CASE("weights json: bit-exact network round trip") {
    Network net = desk_network(4, 21);
    TrackerHead head{0.37, -0.02};
    const std::string text = network_to_json(net, head);
    CHECK(text.find("resiam-weights") != std::string::npos);
    CHECK(text.find("\"version\": 1") != std::string::npos);

    auto [back, bhead] = network_from_json(text);
    CHECK(back.spec.group.Lambda == net.spec.group.Lambda);
    CHECK(back.basis.manifest() == net.basis.manifest());
    REQUIRE(back.spec.layers.size() == net.spec.layers.size());
    for (std::size_t i = 0; i < net.spec.layers.size(); ++i) {
        CHECK(back.spec.layers[i].kind == net.spec.layers[i].kind);
        CHECK(back.spec.layers[i].stride == net.spec.layers[i].stride);
        CHECK(back.spec.layers[i].norm == net.spec.layers[i].norm);
    }
    REQUIRE(back.params.size() == net.params.size());
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        CHECK(back.params[i].re.storage() == net.params[i].re.storage());
        CHECK(back.params[i].im.storage() == net.params[i].im.storage());
        CHECK(back.params[i].bias == net.params[i].bias);
    }
    CHECK(bhead.gain == head.gain);
    CHECK(bhead.bias == head.bias);

    // the restored encoder is the same function, bit for bit
    Rng rng(62);
    Tensor t = Tensor::zeros({1, 35, 35});
    for (double& v : t.storage()) v = rng.uniform();
    ImagePatch img(std::move(t));
    CHECK(forward(back, img).storage() == forward(net, img).storage());
}

TEST_CASE("weights json: malformed containers are rejected") {
    Network net = desk_network(1, 3);
    const std::string good = network_to_json(net, TrackerHead{});

    CHECK_THROWS_AS(network_from_json("not json at all"), std::invalid_argument);
    CHECK_THROWS_AS(network_from_json("{}"), std::invalid_argument);

    std::string wrong_format = good;
    wrong_format.replace(wrong_format.find("resiam-weights"), 14, "something-else");
    CHECK_THROWS_AS(network_from_json(wrong_format), std::invalid_argument);

    std::string wrong_version = good;
    wrong_version.replace(wrong_version.find("\"version\": 1"), 12, "\"version\": 9");
    CHECK_THROWS_AS(network_from_json(wrong_version), std::invalid_argument);

    // truncating a coefficient array must not silently load
    const std::size_t re_pos = good.find("\"re\": [");
    REQUIRE(re_pos != std::string::npos);
    const std::size_t first_comma = good.find(',', re_pos + 7);
    std::string truncated = good;
    truncated.erase(re_pos + 7, first_comma - (re_pos + 7) + 1);
    CHECK_THROWS_AS(network_from_json(truncated), std::invalid_argument);
}

TEST_CASE("weights json: file save and load") {
    const auto dir = temp_dir();
    Network net = desk_network(8, 5);
    TrackerHead head{0.01, 0.5};
    const std::string path = (dir / "weights.json").string();
    save_network(path, net, head);
    auto [back, bhead] = load_network(path);
    CHECK(back.param_count() == net.param_count());
    CHECK(back.params[2].re.storage() == net.params[2].re.storage());
    CHECK(bhead.bias == 0.5);
    CHECK_THROWS_AS(load_network((dir / "missing.json").string()), std::runtime_error);
}

TEST_CASE("text files: round trip and missing-file error") {
    const auto dir = temp_dir();
    const std::string path = (dir / "t.txt").string();
    write_text_file(path, "line1\nline2\n");
    CHECK(read_text_file(path) == "line1\nline2\n");
    CHECK_THROWS_AS(read_text_file((dir / "absent.txt").string()), std::runtime_error);
}
