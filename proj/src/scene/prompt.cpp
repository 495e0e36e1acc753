#include "mt3d/scene/prompt.hpp"

#include <algorithm>
#include <cmath>

#include "mt3d/core/errors.hpp"
#include "mt3d/retrieval/embedding.hpp"
#include "mt3d/scene/camera.hpp"

namespace mt3d {

std::string_view view_tag_text(ViewTag tag) {
    switch (tag) {
        case ViewTag::kFront: return "front view";
        case ViewTag::kSide: return "side view";
        case ViewTag::kBack: return "back view";
        case ViewTag::kOverhead: return "overhead view";
    }
    return "front view";
}

PromptEmbedding PromptEmbedding::from_text(std::string text) {
    PromptEmbedding p;
    p.vector = embed(text);
    p.tokens = tokenize(text);
    std::sort(p.tokens.begin(), p.tokens.end());
    p.text = std::move(text);
    return p;
}

ViewTag classify_view(double azimuth, double elevation) {
    constexpr double kDeg = M_PI / 180.0;
    if (elevation > 60.0 * kDeg) return ViewTag::kOverhead;
    double a = std::remainder(azimuth, 2.0 * M_PI);  // [-pi, pi]
    if (a <= -M_PI) a += 2.0 * M_PI;
    if (a > -45.0 * kDeg && a <= 45.0 * kDeg) return ViewTag::kFront;
    if (a > 135.0 * kDeg || a <= -135.0 * kDeg) return ViewTag::kBack;
    return ViewTag::kSide;
}

PromptEmbedding view_prompt(const std::string& prompt, const CameraPose& camera) {
    if (prompt.empty()) throw InvalidInput("view_prompt: empty prompt");
    const ViewTag tag = classify_view(camera.azimuth(), camera.elevation());
    return PromptEmbedding::from_text(prompt + ", " + std::string(view_tag_text(tag)));
}

}  // namespace mt3d
