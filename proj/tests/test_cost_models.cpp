#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "offload/cost_models.hpp"
#include "offload/errors.hpp"

using namespace offload;

namespace {

// Published per-device reference columns for the shared benchmark workload:
// measured latency (s) and usage cost (USD). Test oracle only; the shipped
// device table carries just (name, TFLOPS, Watts).
struct DeviceReference {
  const char* name;
  double latency_s;
  double cost_usd;
};

constexpr DeviceReference kDeviceReference[] = {
    {"Raspberry Pi-4B", 1.12593, 4.17e-7},
    {"Raspberry Pi-5", 0.48408, 2.69e-7},
    {"Jetson Nano", 0.03220, 1.49e-8},
    {"Jetson TX2", 0.01143, 7.94e-9},
    {"Jetson Xavier NX", 0.00072, 6.71e-10},
    {"Jetson Orin NX", 0.00015, 1.76e-10},
    {"iPhone 15 (A16)", 0.00096, 6.69e-10},
    {"iPhone 15 Pro (A17 Pro)", 0.00043, 3.02e-10},
};

// Workload whose 2*params*tokens/ref product equals `flops`.
LocalWorkload workload_of(double flops) { return LocalWorkload{flops / 2.0, 1.0, 1.0}; }

}  // namespace

TEST_CASE("local latency reproduces the reference device columns") {
  const LocalWorkload w = workload_of(1.52e10);
  const DeviceProfile tx2 = find_device("Jetson TX2");
  CHECK(local_latency_s(w, tx2) == doctest::Approx(0.01143).epsilon(1e-3));
  const DeviceProfile pi4 = find_device("Raspberry Pi-4B");
  CHECK(local_latency_s(w, pi4) == doctest::Approx(1.12593).epsilon(1e-4));
}

TEST_CASE("local latency is linear in tokens") {
  const DeviceProfile d = find_device("Jetson TX2");
  LocalWorkload w{3.8e9, 100, 90.5};
  const double base = local_latency_s(w, d);
  w.total_tokens = 200;
  CHECK(local_latency_s(w, d) == doctest::Approx(2.0 * base).epsilon(1e-12));
}

TEST_CASE("latency times peak flops is device-invariant for a fixed workload") {
  const LocalWorkload w{3.8e9, 181, 90.5};
  const double reference = local_latency_s(w, builtin_devices()[0]) *
                           builtin_devices()[0].peak_tflops * 1e12;
  for (const auto& d : builtin_devices()) {
    const double product = local_latency_s(w, d) * d.peak_tflops * 1e12;
    CHECK(product == doctest::Approx(reference).epsilon(1e-9));
  }
}

TEST_CASE("local cost reproduces the reference device columns") {
  const EnergyPricing kappa{4.63e-8};
  const DeviceProfile pi4 = find_device("Raspberry Pi-4B");
  CHECK(local_cost_usd(1.12593, pi4, kappa) == doctest::Approx(4.17e-7).epsilon(0.01));
  const DeviceProfile tx2 = find_device("Jetson TX2");
  CHECK(local_cost_usd(0.01143, tx2, kappa) == doctest::Approx(7.94e-9).epsilon(0.01));
  CHECK(local_cost_usd(0.0, tx2, kappa) == 0.0);
}

TEST_CASE("device table round trip: derived workload reproduces every cost column") {
  // The shared workload constant is derived from the table itself.
  double workload_sum = 0.0;
  for (const auto& ref : kDeviceReference) {
    workload_sum += ref.latency_s * find_device(ref.name).peak_tflops * 1e12;
  }
  const double workload = workload_sum / std::size(kDeviceReference);
  const EnergyPricing kappa{4.63e-8};
  for (const auto& ref : kDeviceReference) {
    const DeviceProfile d = find_device(ref.name);
    const double lat = local_latency_s(workload_of(workload), d);
    const double cost = local_cost_usd(lat, d, kappa);
    CHECK(std::abs(cost - ref.cost_usd) / ref.cost_usd < 0.01);
  }
}

TEST_CASE("cloud cost arithmetic") {
  CloudRates rates;
  rates.modality_rates = {0.003, 0.003, 0.003};
  const ModalitySet none;
  CHECK(cloud_cost_usd(1000, 1000, none, std::vector<double>{1, 1, 1}, rates) ==
        doctest::Approx(0.020).epsilon(1e-12));
  CHECK(cloud_cost_usd(0, 0, none, std::vector<double>{1, 1, 1}, rates) == 0.0);

  const ModalitySet one = ModalitySet::from_mask(1);  // phi_m * |D| = 0.003
  const double with_one = cloud_cost_usd(1000, 1000, one, std::vector<double>{1, 1, 1}, rates);
  CHECK(with_one == doctest::Approx(0.020 + 0.003).epsilon(1e-12));
}

TEST_CASE("cloud cost rejects a size for an unselected modality") {
  CloudRates rates;
  rates.modality_rates = {0.003, 0.003, 0.003};
  const std::vector<std::pair<int, double>> sizes = {{1, 1.0}};
  CHECK_THROWS_AS(cloud_cost_usd(10, 10, ModalitySet::from_mask(1), sizes, rates),
                  std::invalid_argument);
  CHECK_NOTHROW(cloud_cost_usd(10, 10, ModalitySet::from_mask(2), sizes, rates));
}

TEST_CASE("cloud cost is monotone in its arguments") {
  CloudRates rates;
  rates.modality_rates = {0.002, 0.004, 0.006};
  const std::vector<double> sizes{1, 1, 1};
  double prev = -1;
  for (std::uint32_t mask = 0; mask < 8; ++mask) {
    const double c =
        cloud_cost_usd(50, 50, ModalitySet::from_mask(mask), sizes, rates);
    CHECK(c >= cloud_cost_usd(50, 50, ModalitySet{}, sizes, rates));
    (void)prev;
  }
  CHECK(cloud_cost_usd(100, 50, ModalitySet{}, sizes, rates) >
        cloud_cost_usd(50, 50, ModalitySet{}, sizes, rates));
  CHECK(cloud_cost_usd(50, 100, ModalitySet{}, sizes, rates) >
        cloud_cost_usd(50, 50, ModalitySet{}, sizes, rates));
}

TEST_CASE("association is the cosine of the two embeddings") {
  const EmbeddingVector v{{0.5, -0.25, 2.0}};
  CHECK(association(v, v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(association({{1, 0}}, {{0, 1}}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(association({{1, 0}}, {{1, 1}}) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK_THROWS_AS(association({{0, 0}}, {{1, 1}}), std::invalid_argument);
}

TEST_CASE("association is scale invariant") {
  const EmbeddingVector u{{0.3, -1.2, 0.7, 2.0}};
  const EmbeddingVector v{{1.0, 0.4, -0.2, 0.5}};
  const double base = association(u, v);
  for (double c : {0.001, 0.5, 3.0, 1e6}) {
    EmbeddingVector scaled = u;
    for (auto& x : scaled.values) x *= c;
    CHECK(association(scaled, v) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("minmax normalization clamps to [0, 1]") {
  CHECK(minmax_normalize(2.0, 2.0, 4.0) == 0.0);
  CHECK(minmax_normalize(4.0, 2.0, 4.0) == 1.0);
  CHECK(minmax_normalize(3.0, 2.0, 4.0) == doctest::Approx(0.5));
  CHECK(minmax_normalize(9.0, 2.0, 4.0) == 1.0);   // test-split outlier above
  CHECK(minmax_normalize(-1.0, 2.0, 4.0) == 0.0);  // and below
  CHECK_THROWS_AS(minmax_normalize(1.0, 4.0, 4.0), std::invalid_argument);
}

TEST_CASE("device table file loads and filters") {
  CHECK(builtin_devices().size() == 8);
  CHECK(find_device("Jetson TX2").max_watts == 15);
  CHECK_THROWS_AS(find_device("No Such Device"), ConfigError);

  const auto path = std::filesystem::temp_directory_path() / "offload_devices_test.csv";
  {
    std::ofstream out(path);
    out << "name,tflops,watts\n# comment\nTestBoard,2.5,11\n";
  }
  const auto table = load_device_table(path);
  REQUIRE(table.size() == 1);
  CHECK(table[0].name == "TestBoard");
  CHECK(table[0].peak_tflops == doctest::Approx(2.5));
  CHECK(table[0].max_watts == doctest::Approx(11.0));
  std::filesystem::remove(path);
}

TEST_CASE("embedding file loads id-prefixed vectors") {
  const auto path = std::filesystem::temp_directory_path() / "offload_embeddings_test.txt";
  {
    std::ofstream out(path);
    out << "prompt_0 1.0 0.0\nview_a 1.0 1.0\n";
  }
  const auto embs = load_embeddings(path);
  REQUIRE(embs.size() == 2);
  CHECK(embs[0].first == "prompt_0");
  CHECK(association(embs[0].second, embs[1].second) ==
        doctest::Approx(0.70711).epsilon(1e-5));
  std::filesystem::remove(path);
}
