#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "typei/metrics.hpp"

namespace typei {

enum class ReportFormat { csv, json };

ReportFormat parse_report_format(const std::string& text);

// Version of the JSON report layout (schemas/report.schema.json).
inline constexpr int kReportSchemaVersion = 1;

// CSV columns, in order. The first data row (record = "summary") carries the
// campaign means; every following row (record = "sample") is one digest.
inline constexpr const char* kCsvHeader =
    "record,dataset,mode,num_samples,successes_only,index,Dis_input,Dis_output,Dev,success,"
    "success_rate,iterations,final_lambda";

nlohmann::json to_json(const SampleDigest& d);
SampleDigest sample_digest_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CampaignSummary& s);
CampaignSummary campaign_summary_from_json(const nlohmann::json& j);

std::string to_csv(const CampaignSummary& s);
CampaignSummary campaign_summary_from_csv(const std::string& text);

void write_report(const CampaignSummary& summary, const std::filesystem::path& path, ReportFormat format);
CampaignSummary read_report(const std::filesystem::path& path, ReportFormat format);

}  // namespace typei
