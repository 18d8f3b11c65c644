#include "figforge/corpus/ingest.hpp"

#include <algorithm>
#include <variant>

#include "figforge/common/error.hpp"
#include "figforge/common/parallel.hpp"
#include "figforge/common/text.hpp"

namespace figforge::corpus {

namespace fs = std::filesystem;

bool is_image_path(const fs::path& p) {
  const std::string ext = text::to_lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

IngestReport ingest(const fs::path& root, SourceTag source, Catalog& catalog,
                    const IngestOptions& opts) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::RootNotFound, root.string() + " is not a readable directory");
  }

  std::vector<fs::path> files;
  for (fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec), end;
       !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file() && is_image_path(it->path())) files.push_back(it->path());
  }
  if (ec) throw Error(ErrorCode::RootNotFound, "walking " + root.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  using Decoded = std::variant<ImageAsset, SkipRecord>;
  std::vector<Decoded> decoded(files.size());
  parallel_for(files.size(), opts.workers, [&](std::size_t i) {
    const std::string ref = files[i].string();
    try {
      decoded[i] = make_asset(load_image(files[i]), source, ref, opts.classify);
    } catch (const Error& e) {
      decoded[i] = SkipRecord{ref, source, e.what()};
    }
  });

  IngestReport report;
  for (auto& d : decoded) {
    if (auto* asset = std::get_if<ImageAsset>(&d)) {
      if (catalog.append(*asset)) {
        report.added.push_back(std::move(*asset));
      } else {
        ++report.already_present;
      }
    } else {
      auto& skip = std::get<SkipRecord>(d);
      catalog.append_skip(skip);
      report.skipped.push_back(std::move(skip));
    }
  }
  return report;
}

}  // namespace figforge::corpus
