#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "dsl/report/csv.hpp"
#include "dsl/report/manifest.hpp"

using namespace dsl::report;

namespace {
std::string temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "dsl_report_test";
  std::filesystem::create_directories(dir);
  return dir.string();
}
}  // namespace

TEST_CASE("format_double is stable and compact") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.158655253931457) == "0.158655253931");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(1e300) == "1e+300");
}

TEST_CASE("table round trip") {
  Table t({"a", "b"});
  t.add_row({"1", "x"});
  t.add_row({"2", "y"});
  CHECK(t.to_csv() == "a,b\n1,x\n2,y\n");
  CHECK_THROWS_AS(t.add_row({"only-one"}), std::invalid_argument);
  const std::string j = t.to_json();
  CHECK(j.find("\"a\": \"1\"") != std::string::npos);
}

TEST_CASE("fnv1a64 known vectors") {
  // Published FNV-1a test vectors.
  CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
  CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
  CHECK(fnv1a64("foobar") == 0x85944171F73967E8ULL);
  CHECK(checksum_hex("") == "fnv1a64:cbf29ce484222325");
}

TEST_CASE("manifest records and verifies checksums") {
  const std::string dir = temp_dir();
  write_file_atomic(dir + "/data.csv", "x,y\n1,2\n");
  RunManifest m;
  m.tool_version = "test";
  m.command = "unit";
  m.master_seed = 42;
  m.config_echo = "foo=1";
  m.add_output(dir, "data.csv");
  REQUIRE(m.outputs.size() == 1);
  CHECK(m.outputs[0].byte_count == 8);
  CHECK(verify_manifest(dir, m));

  // Tamper and confirm the mismatch is caught.
  write_file_atomic(dir + "/data.csv", "x,y\n1,3\n");
  CHECK(!verify_manifest(dir, m));

  m.write(dir);
  const std::string j = read_file(dir + "/manifest.json");
  CHECK(j.find("\"master_seed\": 42") != std::string::npos);
  CHECK(j.find("data.csv") != std::string::npos);
}

TEST_CASE("atomic write replaces content completely") {
  const std::string dir = temp_dir();
  write_file_atomic(dir + "/f.txt", "first");
  write_file_atomic(dir + "/f.txt", "second");
  CHECK(read_file(dir + "/f.txt") == "second");
}
