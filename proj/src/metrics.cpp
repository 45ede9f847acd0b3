#include "procseed/metrics.hpp"

#include "procseed/errors.hpp"

namespace procseed {

nlohmann::ordered_json to_json(const MetricsRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["tokens_seen"] = r.tokens_seen;
  j["phase"] = r.phase;
  j["loss"] = r.loss;
  j["token_accuracy"] = r.token_accuracy;
  j["perplexity"] = r.perplexity;
  j["lr"] = r.lr;
  j["train_loss"] = r.train_loss;
  if (r.input_length) j["input_length"] = *r.input_length;
  if (r.per_head_entropy) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index l = 0; l < r.per_head_entropy->rows(); ++l) {
      std::vector<double> row;
      for (Eigen::Index h = 0; h < r.per_head_entropy->cols(); ++h)
        row.push_back((*r.per_head_entropy)(l, h));
      rows.push_back(std::move(row));
    }
    j["per_head_entropy"] = rows;
  }
  return j;
}

MetricsRecord metrics_from_json(const nlohmann::json& j) {
  MetricsRecord r;
  r.step = j.at("step").get<int64_t>();
  r.tokens_seen = j.at("tokens_seen").get<int64_t>();
  r.phase = j.at("phase").get<std::string>();
  r.loss = j.at("loss").get<double>();
  r.token_accuracy = j.at("token_accuracy").get<double>();
  r.perplexity = j.at("perplexity").get<double>();
  r.lr = j.at("lr").get<double>();
  if (j.contains("train_loss")) r.train_loss = j["train_loss"].get<double>();
  if (j.contains("input_length"))
    r.input_length = j["input_length"].get<int>();
  if (j.contains("per_head_entropy")) {
    auto rows = j["per_head_entropy"].get<std::vector<std::vector<double>>>();
    if (!rows.empty()) {
      MatD m(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows[0].size()));
      for (size_t l = 0; l < rows.size(); ++l) {
        if (rows[l].size() != rows[0].size())
          throw IoError("ragged per_head_entropy matrix");
        for (size_t h = 0; h < rows[l].size(); ++h)
          m(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(h)) =
              rows[l][h];
      }
      r.per_head_entropy = std::move(m);
    }
  }
  return r;
}

MetricsWriter::MetricsWriter(const std::string& path)
    : out_(path, std::ios::app) {
  if (!out_) throw IoError("cannot open metrics file: " + path);
}

void MetricsWriter::write(const MetricsRecord& r) {
  out_ << to_json(r).dump() << "\n";
  out_.flush();
  if (!out_) throw IoError("failed writing metrics record");
}

std::vector<MetricsRecord> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file: " + path);
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(metrics_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace procseed
