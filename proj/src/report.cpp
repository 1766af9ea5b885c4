#include "typei/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "typei/error.hpp"

namespace typei {
namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const char* field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ReportError(std::string("bad numeric value for ") + field + ": '" + s + "'");
  }
}

std::size_t parse_count(const std::string& s, const char* field) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ReportError(std::string("bad integer value for ") + field + ": '" + s + "'");
  }
}

bool parse_bool(const std::string& s, const char* field) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ReportError(std::string("bad boolean value for ") + field + ": '" + s + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  throw ReportError("unknown report format '" + text + "'");
}

nlohmann::json to_json(const SampleDigest& d) {
  return {{"index", d.index},
          {"Dis_input", d.input_distance},
          {"Dis_output", d.output_distance},
          {"Dev", d.deviation ? nlohmann::json(*d.deviation) : nlohmann::json(nullptr)},
          {"success", d.success},
          {"iterations", d.iterations},
          {"final_lambda", d.final_lambda}};
}

SampleDigest sample_digest_from_json(const nlohmann::json& j) {
  try {
    SampleDigest d;
    d.index = j.at("index").get<std::size_t>();
    d.input_distance = j.at("Dis_input").get<double>();
    d.output_distance = j.at("Dis_output").get<double>();
    if (!j.at("Dev").is_null()) d.deviation = j.at("Dev").get<double>();
    d.success = j.at("success").get<bool>();
    d.iterations = j.at("iterations").get<std::size_t>();
    d.final_lambda = j.at("final_lambda").get<double>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("malformed sample digest: ") + e.what());
  }
}

nlohmann::json to_json(const CampaignSummary& s) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& d : s.per_sample_records) samples.push_back(to_json(d));
  return {{"schema_version", kReportSchemaVersion},
          {"dataset", s.dataset_name},
          {"mode", to_string(s.mode)},
          {"num_samples", s.num_samples},
          {"Dis_input", s.mean_input_distance},
          {"Dis_output", s.mean_output_distance},
          {"Dev", s.mean_dev ? nlohmann::json(*s.mean_dev) : nlohmann::json(nullptr)},
          {"success_rate", s.success_rate},
          {"successes_only", s.successes_only},
          {"samples", std::move(samples)}};
}

CampaignSummary campaign_summary_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw ReportError("unsupported report schema version " + j.at("schema_version").dump());
    }
    CampaignSummary s;
    s.dataset_name = j.at("dataset").get<std::string>();
    s.mode = parse_attack_mode(j.at("mode").get<std::string>());
    s.num_samples = j.at("num_samples").get<std::size_t>();
    s.mean_input_distance = j.at("Dis_input").get<double>();
    s.mean_output_distance = j.at("Dis_output").get<double>();
    if (!j.at("Dev").is_null()) s.mean_dev = j.at("Dev").get<double>();
    s.success_rate = j.at("success_rate").get<double>();
    s.successes_only = j.at("successes_only").get<bool>();
    for (const auto& d : j.at("samples")) s.per_sample_records.push_back(sample_digest_from_json(d));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  } catch (const ConfigError& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
}

std::string to_csv(const CampaignSummary& s) {
  if (s.dataset_name.find_first_of(",\n") != std::string::npos) {
    throw ReportError("dataset name cannot contain commas or newlines in CSV reports");
  }
  std::ostringstream out;
  out << kCsvHeader << '\n';
  out << "summary," << s.dataset_name << ',' << to_string(s.mode) << ',' << s.num_samples << ','
      << (s.successes_only ? "true" : "false") << ",," << exact(s.mean_input_distance) << ','
      << exact(s.mean_output_distance) << ',' << (s.mean_dev ? exact(*s.mean_dev) : "") << ",,"
      << exact(s.success_rate) << ",,\n";
  for (const auto& d : s.per_sample_records) {
    out << "sample,,,,," << d.index << ',' << exact(d.input_distance) << ',' << exact(d.output_distance)
        << ',' << (d.deviation ? exact(*d.deviation) : "") << ',' << (d.success ? "true" : "false")
        << ",," << d.iterations << ',' << exact(d.final_lambda) << '\n';
  }
  return out.str();
}

CampaignSummary campaign_summary_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ReportError("CSV report has an unexpected header");
  constexpr std::size_t kColumns = 13;
  CampaignSummary s;
  bool have_summary = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != kColumns) {
      throw ReportError("CSV line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                        " columns, expected " + std::to_string(kColumns));
    }
    if (f[0] == "summary") {
      if (have_summary) throw ReportError("CSV report has two summary rows");
      have_summary = true;
      s.dataset_name = f[1];
      try {
        s.mode = parse_attack_mode(f[2]);
      } catch (const ConfigError& e) {
        throw ReportError(e.what());
      }
      s.num_samples = parse_count(f[3], "num_samples");
      s.successes_only = parse_bool(f[4], "successes_only");
      s.mean_input_distance = parse_double(f[6], "Dis_input");
      s.mean_output_distance = parse_double(f[7], "Dis_output");
      if (!f[8].empty()) s.mean_dev = parse_double(f[8], "Dev");
      s.success_rate = parse_double(f[10], "success_rate");
    } else if (f[0] == "sample") {
      SampleDigest d;
      d.index = parse_count(f[5], "index");
      d.input_distance = parse_double(f[6], "Dis_input");
      d.output_distance = parse_double(f[7], "Dis_output");
      if (!f[8].empty()) d.deviation = parse_double(f[8], "Dev");
      d.success = parse_bool(f[9], "success");
      d.iterations = parse_count(f[11], "iterations");
      d.final_lambda = parse_double(f[12], "final_lambda");
      s.per_sample_records.push_back(d);
    } else {
      throw ReportError("CSV line " + std::to_string(line_no) + " has unknown record type '" + f[0] + "'");
    }
  }
  if (!have_summary) throw ReportError("CSV report lacks a summary row");
  return s;
}

void write_report(const CampaignSummary& summary, const std::filesystem::path& path, ReportFormat format) {
  const std::string text = format == ReportFormat::json ? to_json(summary).dump(2) + "\n" : to_csv(summary);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ReportError("cannot write report " + path.string());
  out << text;
  if (!out) throw ReportError("failed writing report " + path.string());
}

CampaignSummary read_report(const std::filesystem::path& path, ReportFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReportError("cannot read report " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (format == ReportFormat::csv) return campaign_summary_from_csv(buf.str());
  const auto j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw ReportError("report " + path.string() + " is not valid JSON");
  return campaign_summary_from_json(j);
}

}  // namespace typei
