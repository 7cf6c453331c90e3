#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pipefail/cv.hpp"
#include "pipefail/features.hpp"
#include "pipefail/gbt.hpp"
#include "pipefail/logit.hpp"
#include "pipefail/survival.hpp"

namespace pipefail {

// JSON artifacts written next to the CSV outputs so a fitted model can be
// reloaded later (explain, scoring). Files are plain nlohmann JSON with a
// schema_version field; loads validate the schema and throw DataError on
// anything malformed, so a truncated or hand-edited file fails loudly.

struct ClassifierArtifact {
    ModelKind kind = ModelKind::gbt;
    int horizon_k = 0;
    int test_year = 0;
    std::vector<int> train_years;
    double threshold = 0.5;
    LogitModel logit;    // populated when kind == logit
    BoostedEnsemble gbt; // populated when kind == gbt
};

struct CoxArtifact {
    CoxModel model;
    EncoderState encoder;
    std::vector<double> lambda_path;    // empty when lambda was fixed
    std::vector<double> holdout_cindex; // aligned with lambda_path
    std::size_t selected = 0;           // index into lambda_path
};

void save_classifier(const std::string& path, const ClassifierArtifact& artifact);
ClassifierArtifact load_classifier(const std::string& path);

void save_encoder(const std::string& path, const EncoderState& encoder);
EncoderState load_encoder(const std::string& path);

void save_cox(const std::string& path, const CoxArtifact& artifact);
CoxArtifact load_cox(const std::string& path);

}  // namespace pipefail
