#include "handseg/dataset.hpp"

#include "handseg/error.hpp"
#include "handseg/image_io.hpp"

namespace handseg::io {

namespace fs = std::filesystem;

std::optional<fs::path> find_mask(const fs::path& dir, const fs::path& stem) {
  for (const char* ext : {".png", ".PNG", ".jpg", ".jpeg", ".bmp"}) {
    fs::path p = dir / stem;
    p += ext;
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

BinaryMask read_binary_mask(const fs::path& path) {
  const LabelImage raw = read_label_image(path);
  BinaryMask m(raw.width(), raw.height());
  for (std::size_t i = 0; i < raw.size(); ++i) m[i] = raw[i] != 0;
  return m;
}

LRMask read_lr_truth(const fs::path& dir, const fs::path& frame_name) {
  const fs::path stem = frame_name.stem();
  if (fs::is_directory(dir / "left") && fs::is_directory(dir / "right")) {
    const auto lp = find_mask(dir / "left", stem);
    const auto rp = find_mask(dir / "right", stem);
    if (!lp && !rp) throw DataError("no truth mask for " + frame_name.string());
    std::optional<BinaryMask> l, r;
    if (lp) l = read_binary_mask(*lp);
    if (rp) r = read_binary_mask(*rp);
    const BinaryMask& any = l ? *l : *r;
    if (l && r && !l->same_shape(*r))
      throw DataError("left and right masks differ in size: " + stem.string());
    LRMask out(any.width(), any.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (r && (*r)[i]) out[i] = 2;
      else if (l && (*l)[i]) out[i] = 1;
    }
    return out;
  }
  const auto p = find_mask(dir, stem);
  if (!p) throw DataError("no truth mask for " + frame_name.string());
  const LabelImage raw = read_label_image(*p);
  LRMask out(raw.width(), raw.height());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] > 2) throw DataError("mask is not three-class: " + p->string());
    out[i] = raw[i];
  }
  return out;
}

std::vector<TrainingPair> load_training_pairs(const fs::path& frames_dir,
                                              const fs::path& masks_dir) {
  std::vector<TrainingPair> pairs;
  for (const fs::path& f : list_images(frames_dir)) {
    const auto m = find_mask(masks_dir, f.stem());
    if (!m) continue;
    TrainingPair p{read_frame(f), read_binary_mask(*m), f.filename().string()};
    if (!p.mask.same_shape(p.frame.width(), p.frame.height()))
      throw DataError("mask size differs from frame: " + f.string());
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw DataError("no frame/mask pairs in " + frames_dir.string());
  return pairs;
}

}  // namespace handseg::io
