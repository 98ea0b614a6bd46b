#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "castkit/cast.hpp"
#include "castkit/errors.hpp"

namespace castkit {
namespace {

std::string file_stem(const std::string& stage) {
  std::string out;
  for (char c : stage) out.push_back(c == '/' ? '_' : c);
  return out;
}

nlohmann::json histogram_json(const SimilarityHistogram& h) {
  return nlohmann::json(std::vector<std::uint64_t>(h.counts.begin(), h.counts.end()));
}

}  // namespace

void write_stage_report(const std::filesystem::path& dir,
                        const std::vector<StageStats>& stages) {
  std::filesystem::create_directories(dir / "histograms");
  std::ofstream report(dir / "stage_stats.jsonl", std::ios::binary | std::ios::trunc);
  if (!report) throw IoError((dir / "stage_stats.jsonl").string() + ": cannot open");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    nlohmann::ordered_json rec;
    rec["index"] = i;
    rec["stage"] = s.stage_name;
    rec["identities_before"] = s.identities_before;
    rec["identities_after"] = s.identities_after;
    rec["faces_before"] = s.faces_before;
    rec["faces_after"] = s.faces_after;
    rec["intra_pairs"] = s.intra_similarity_histogram.total();
    rec["inter_pairs"] = s.inter_similarity_histogram.total();
    rec["overlap_integral"] = overlap_integral(s.intra_similarity_histogram,
                                               s.inter_similarity_histogram);
    rec["intra_histogram"] = histogram_json(s.intra_similarity_histogram);
    rec["inter_histogram"] = histogram_json(s.inter_similarity_histogram);
    report << rec.dump() << '\n';

    char name[32];
    std::snprintf(name, sizeof name, "%02zu_", i);
    const auto csv_path = dir / "histograms" / (name + file_stem(s.stage_name) + ".csv");
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError(csv_path.string() + ": cannot open");
    csv << "bin_lower,bin_upper,intra,inter\n";
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
      char line[96];
      std::snprintf(line, sizeof line, "%.2f,%.2f,%llu,%llu\n",
                    SimilarityHistogram::bin_lower(b),
                    SimilarityHistogram::bin_lower(b + 1),
                    static_cast<unsigned long long>(s.intra_similarity_histogram.counts[b]),
                    static_cast<unsigned long long>(s.inter_similarity_histogram.counts[b]));
      csv << line;
    }
  }
  if (!report) throw IoError((dir / "stage_stats.jsonl").string() + ": write failed");
}

}  // namespace castkit
