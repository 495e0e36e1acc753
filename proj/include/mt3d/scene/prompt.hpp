#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mt3d {

struct CameraPose;

enum class ViewTag { kFront, kSide, kBack, kOverhead };

std::string_view view_tag_text(ViewTag tag);

/// Text prompt together with its token multiset and embedding vector.
struct PromptEmbedding {
    std::string text;
    std::vector<std::string> tokens;  // sorted
    std::vector<double> vector;

    static PromptEmbedding from_text(std::string text);
};

/// Quadrant convention: elevation above 60 degrees is overhead; otherwise the
/// azimuth (wrapped to (-180, 180]) is front in (-45, 45], side in (45, 135] and
/// (-135, -45], back elsewhere.
ViewTag classify_view(double azimuth, double elevation);

/// Appends the view tag of the camera to the prompt and recomputes the embedding.
/// Throws InvalidInput for an empty prompt.
PromptEmbedding view_prompt(const std::string& prompt, const CameraPose& camera);

}  // namespace mt3d
