#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "typei/error.hpp"
#include "typei/report.hpp"

using namespace typei;
using namespace typei::test;

namespace {

CampaignSummary sample_summary(bool with_dev) {
  CampaignSummary s;
  s.dataset_name = with_dev ? "style-generator" : "mnist";
  s.mode = with_dev ? AttackMode::style_space : AttackMode::image_space;
  for (std::size_t i = 0; i < 3; ++i) {
    SampleDigest d;
    d.index = i;
    d.input_distance = 0.1 + 0.2 * static_cast<double>(i) + 1e-17;
    d.output_distance = 1.0 / 3.0 + static_cast<double>(i);
    if (with_dev) d.deviation = 100.0 / 7.0 * static_cast<double>(i + 1);
    d.success = i != 1;
    d.iterations = 10 * i + 1;
    d.final_lambda = 0.3 * static_cast<double>(i);
    s.per_sample_records.push_back(d);
  }
  s.num_samples = 3;
  s.mean_input_distance = 0.30000000000000004;
  s.mean_output_distance = 4.0 / 3.0;
  if (with_dev) s.mean_dev = 200.0 / 7.0;
  s.success_rate = 2.0 / 3.0;
  return s;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Report, JsonRoundTripIsLossless) {
  const auto dir = scratch_dir("report-json");
  for (bool dev : {false, true}) {
    const auto s = sample_summary(dev);
    write_report(s, dir / "r.json", ReportFormat::json);
    EXPECT_EQ(read_report(dir / "r.json", ReportFormat::json), s);
  }
}

TEST(Report, CsvRoundTripIsLossless) {
  const auto dir = scratch_dir("report-csv");
  for (bool dev : {false, true}) {
    const auto s = sample_summary(dev);
    write_report(s, dir / "r.csv", ReportFormat::csv);
    EXPECT_EQ(read_report(dir / "r.csv", ReportFormat::csv), s);
  }
}

TEST(Report, CsvHeaderListsRequiredColumns) {
  const auto dir = scratch_dir("report-header");
  write_report(sample_summary(false), dir / "r.csv", ReportFormat::csv);
  const auto text = read_file(dir / "r.csv");
  const auto header = text.substr(0, text.find('\n'));
  for (const char* col : {"Dis_input", "Dis_output", "Dev", "success_rate"}) {
    EXPECT_NE(header.find(col), std::string::npos) << col;
  }
}

TEST(Report, UnknownFormatAndUnwritablePath) {
  EXPECT_THROW(parse_report_format("xml"), ReportError);
  EXPECT_THROW(write_report(sample_summary(false), "/proc/typei/r.json", ReportFormat::json), ReportError);
}

TEST(Report, MalformedInputIsRejected) {
  const auto dir = scratch_dir("report-bad");
  std::ofstream(dir / "bad.json") << "{\"schema_version\": 1}";
  EXPECT_THROW(read_report(dir / "bad.json", ReportFormat::json), ReportError);
  std::ofstream(dir / "bad.csv") << "not,a,report\n";
  EXPECT_THROW(read_report(dir / "bad.csv", ReportFormat::csv), ReportError);
}

TEST(Report, JsonValidatesAgainstPublishedSchema) {
  if (std::system("python3 -c 'import jsonschema' >/dev/null 2>&1") != 0) GTEST_SKIP() << "jsonschema unavailable";
  const auto dir = scratch_dir("report-schema");
  const std::string schema = std::string(TYPEI_SOURCE_DIR) + "/schemas/report.schema.json";
  for (bool dev : {false, true}) {
    write_report(sample_summary(dev), dir / "r.json", ReportFormat::json);
    const std::string cmd = "python3 -c 'import json,sys,jsonschema; jsonschema.validate(json.load(open(sys.argv[1])), "
                            "json.load(open(sys.argv[2])))' " +
                            (dir / "r.json").string() + " " + schema;
    EXPECT_EQ(std::system(cmd.c_str()), 0);
  }
  std::ofstream(dir / "wrong.json") << "{\"schema_version\": 1, \"dataset\": 3}";
  const std::string bad = "python3 -c 'import json,sys,jsonschema; jsonschema.validate(json.load(open(sys.argv[1])), "
                          "json.load(open(sys.argv[2])))' " +
                          (dir / "wrong.json").string() + " " + schema + " 2>/dev/null";
  EXPECT_NE(std::system(bad.c_str()), 0);
}
