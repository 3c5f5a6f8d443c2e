#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "gdon/io.hpp"

using namespace gdon;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "gdon_test_io";
    fs::create_directories(dir);
    return dir / name;
}

TrajectoryDataset sample_dataset() {
    AdvectionConfig cfg;
    cfg.n_times = 7;
    return generate_advection_dataset(3, sample_irregular_sensors(DomainSpec::box(1, 0.0, 1.0, true), 20, 9, 4), cfg, 123);
}

}  // namespace

TEST(TensorFile, RoundTripsAllDtypes) {
    io::TensorFile f;
    f.tensors["a"] = io::Tensor::from(std::vector<float>{1.5f, -2.0f, 3.25f}, {3});
    f.tensors["b"] = io::Tensor::from(std::vector<double>{0.1, 0.2, 0.3, 0.4}, {2, 2});
    f.tensors["c"] = io::Tensor::from(std::vector<std::int64_t>{-7, 9}, {2});
    f.tensors["empty"] = io::Tensor::from(std::vector<float>{}, {0, 4});
    f.metadata["k"] = "v";
    const auto p = temp_file("tensors.st");
    io::write_tensor_file(p.string(), f);
    const auto g = io::read_tensor_file(p.string());
    EXPECT_EQ(g.tensor("a").as<float>(), f.tensors["a"].as<float>());
    EXPECT_EQ(g.tensor("b").as<double>(), f.tensors["b"].as<double>());
    EXPECT_EQ(g.tensor("b").shape, (std::vector<std::size_t>{2, 2}));
    EXPECT_EQ(g.tensor("c").as<std::int64_t>(), f.tensors["c"].as<std::int64_t>());
    EXPECT_EQ(g.tensor("empty").numel(), 0u);
    EXPECT_EQ(g.attr("k"), "v");
    EXPECT_THROW(g.tensor("a").as<double>(), InvalidArgument);
}

TEST(TensorFile, HeaderIsAlignedSafetensorsLayout) {
    io::TensorFile f;
    f.tensors["x"] = io::Tensor::from(std::vector<double>{1.0}, {1});
    const auto p = temp_file("layout.st");
    io::write_tensor_file(p.string(), f);
    std::ifstream in(p, std::ios::binary);
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    EXPECT_EQ(n % 8, 0u);
    std::string header(n, '\0');
    in.read(header.data(), static_cast<std::streamsize>(n));
    const auto j = nlohmann::json::parse(header);
    EXPECT_EQ(j["x"]["dtype"], "F64");
    EXPECT_EQ(j["x"]["data_offsets"][1], 8);
}

TEST(TensorFile, CorruptFilesRaiseSchemaViolation) {
    const auto p = temp_file("corrupt.st");
    {
        std::ofstream out(p, std::ios::binary);
        const std::uint64_t n = 4;
        out.write(reinterpret_cast<const char*>(&n), 8);
        out << "{bad";
    }
    EXPECT_THROW(io::read_tensor_file(p.string()), SchemaViolation);
    EXPECT_THROW(io::read_tensor_file((p.string() + ".missing")), std::runtime_error);
}

TEST(Dataset, RoundTripIsBitExact) {
    const auto ds = sample_dataset();
    const auto p = temp_file("ds.st");
    io::save_dataset(ds, p.string());
    const auto back = io::load_dataset(p.string());
    ASSERT_EQ(back.u.size(), ds.u.size());
    EXPECT_EQ(std::memcmp(back.u.data(), ds.u.data(), ds.u.size() * sizeof(float)), 0);
    EXPECT_EQ(back.sensors.positions, ds.sensors.positions);
    EXPECT_EQ(back.times, ds.times);
    EXPECT_EQ(back.dt, ds.dt);
    EXPECT_EQ(back.sensors.domain, ds.sensors.domain);
    EXPECT_EQ(back.meta.at("seed"), "123");
    EXPECT_EQ(back.meta.at("equation"), "advection1d");
    EXPECT_EQ(back.extras.at("ic_coeffs").data, ds.extras.at("ic_coeffs").data);
    EXPECT_EQ(back.n_traj, 3u);
    EXPECT_EQ(back.n_times, 7u);
}

TEST(Dataset, MissingTimesIsSchemaViolation) {
    const auto ds = sample_dataset();
    const auto p = temp_file("no_times.st");
    io::save_dataset(ds, p.string());
    auto f = io::read_tensor_file(p.string());
    f.tensors.erase("times");
    io::write_tensor_file(p.string(), f);
    try {
        io::load_dataset(p.string());
        FAIL() << "expected SchemaViolation";
    } catch (const SchemaViolation& e) {
        EXPECT_EQ(e.field(), "times");
    }
}

TEST(Dataset, MissingAttributeIsSchemaViolation) {
    const auto ds = sample_dataset();
    const auto p = temp_file("no_dt.st");
    io::save_dataset(ds, p.string());
    auto f = io::read_tensor_file(p.string());
    f.metadata.erase("dt");
    io::write_tensor_file(p.string(), f);
    try {
        io::load_dataset(p.string());
        FAIL() << "expected SchemaViolation";
    } catch (const SchemaViolation& e) {
        EXPECT_EQ(e.field(), "dt");
    }
}

TEST(Format, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 4.0 / 249.0, -1e-300, 123456789.125}) {
        EXPECT_EQ(io::parse_double(io::format_double(v), "v"), v);
    }
    EXPECT_THROW(io::parse_double("abc", "field"), SchemaViolation);
}
