#include "nerif/sheet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nerif/error.hpp"
#include "text.hpp"

namespace nerif::sheet {

namespace {

constexpr double kLabelFontScale = 0.45;
constexpr double kCaptionFontScale = 0.35;
constexpr int kCaptionLineHeight = 14;
constexpr Color kStripColor{226, 226, 226};
constexpr int kMinLegibleLabelPx = 12;

void check_layout(const PanelLayout& layout) {
  if (layout.columns <= 0 || layout.padding_px <= 0 || layout.label_height_px <= 0 ||
      layout.max_panel_width_px <= 0 || layout.max_side_px <= 0)
    raise(Errc::InvalidConfig, "panel layout dimensions must be positive");
}

std::vector<std::string> wrap_text(const std::string& text, int max_width_px, double scale) {
  std::vector<std::string> lines;
  std::istringstream words(text);
  std::string word, line;
  while (words >> word) {
    const std::string candidate = line.empty() ? word : line + " " + word;
    if (text_width(candidate, scale) <= max_width_px || line.empty()) {
      line = candidate;
    } else {
      lines.push_back(line);
      line = word;
    }
    // hard-cut pathological words so a line always fits
    while (text_width(line, scale) > max_width_px && line.size() > 1) {
      std::size_t keep = line.size() - 1;
      while (keep > 1 && text_width(line.substr(0, keep), scale) > max_width_px) --keep;
      lines.push_back(line.substr(0, keep));
      line = line.substr(keep);
    }
  }
  if (!line.empty()) lines.push_back(line);
  return lines;
}

Raster fit_to_width(const Raster& drawing, int width) {
  if (drawing.width <= width) return drawing;
  const int new_h = std::max(1, static_cast<int>(std::lround(
                                    static_cast<double>(drawing.height) * width / drawing.width)));
  return scale_to(drawing, width, new_h);
}

Raster render_panel(const Raster& drawing, const std::string& title, const std::string& caption,
                    const PanelLayout& layout) {
  const int width = layout.max_panel_width_px;
  const Raster scaled = fit_to_width(drawing, width);

  std::vector<std::string> caption_lines;
  if (!caption.empty()) caption_lines = wrap_text(caption, width - 4, kCaptionFontScale);
  const int caption_h =
      caption_lines.empty() ? 0
                            : static_cast<int>(caption_lines.size()) * kCaptionLineHeight + 6;

  Raster panel = Raster::solid(width, layout.label_height_px + scaled.height + caption_h, kWhite);
  fill_rect(panel, {0, 0, width, layout.label_height_px}, kStripColor);
  draw_text(panel, title, 4, layout.label_height_px - 9, kLabelFontScale, kBlack);
  blit(panel, scaled, (width - scaled.width) / 2, layout.label_height_px);
  for (std::size_t i = 0; i < caption_lines.size(); ++i) {
    draw_text(panel, caption_lines[i], 2,
              layout.label_height_px + scaled.height + kCaptionLineHeight * static_cast<int>(i + 1),
              kCaptionFontScale, kBlack);
  }
  return panel;
}

struct Placed {
  Raster panel;
  int index;
  std::string case_id;
};

ComposedSheet assemble(SheetKind kind, const Raster* context_block, std::vector<Placed> panels,
                       const PanelLayout& layout) {
  const int columns = kind == SheetKind::Test
                          ? std::max<int>(1, static_cast<int>(panels.size()))
                          : layout.columns;
  const int pad = layout.padding_px;
  const int panel_w = layout.max_panel_width_px;
  const int grid_cols = panels.empty() ? 1 : std::min<int>(columns, static_cast<int>(panels.size()));
  int inner_w = grid_cols * panel_w + (grid_cols - 1) * pad;
  if (context_block != nullptr) inner_w = std::max(inner_w, context_block->width);
  const int sheet_w = inner_w + 2 * pad;

  // Row heights first, then total height.
  int total_h = pad;
  if (context_block != nullptr) total_h += context_block->height + pad;
  std::vector<int> row_heights;
  for (std::size_t i = 0; i < panels.size(); i += static_cast<std::size_t>(grid_cols)) {
    int row_h = 0;
    for (std::size_t j = i; j < std::min(panels.size(), i + static_cast<std::size_t>(grid_cols)); ++j)
      row_h = std::max(row_h, panels[j].panel.height);
    row_heights.push_back(row_h);
    total_h += row_h + pad;
  }

  ComposedSheet sheet;
  sheet.kind = kind;
  sheet.label_height_px = layout.label_height_px;
  sheet.image = Raster::solid(sheet_w, total_h, kWhite);

  int y = pad;
  if (context_block != nullptr) {
    blit(sheet.image, *context_block, pad, y);
    sheet.panel_boxes.push_back({0, {pad, y, context_block->width, context_block->height}});
    y += context_block->height + pad;
  }
  std::size_t idx = 0;
  for (std::size_t row = 0; row < row_heights.size(); ++row) {
    for (int col = 0; col < grid_cols && idx < panels.size(); ++col, ++idx) {
      const int x = pad + col * (panel_w + pad);
      blit(sheet.image, panels[idx].panel, x, y);
      sheet.panel_boxes.push_back(
          {panels[idx].index, {x, y, panels[idx].panel.width, panels[idx].panel.height}});
      if (!panels[idx].case_id.empty()) sheet.case_ids.push_back(panels[idx].case_id);
    }
    y += row_heights[row] + pad;
  }

  // Scale cap: shrink proportionally, carrying the panel geometry along.
  const int longest = std::max(sheet.image.width, sheet.image.height);
  if (longest > layout.max_side_px) {
    const double s = static_cast<double>(layout.max_side_px) / longest;
    const int new_w = std::max(1, static_cast<int>(std::floor(sheet.image.width * s)));
    const int new_h = std::max(1, static_cast<int>(std::floor(sheet.image.height * s)));
    sheet.image = scale_to(sheet.image, new_w, new_h);
    for (auto& box : sheet.panel_boxes) {
      const int x2 = static_cast<int>(std::floor((box.rect.x + box.rect.w) * s));
      const int y2 = static_cast<int>(std::floor((box.rect.y + box.rect.h) * s));
      box.rect.x = static_cast<int>(std::floor(box.rect.x * s));
      box.rect.y = static_cast<int>(std::floor(box.rect.y * s));
      box.rect.w = std::max(1, x2 - box.rect.x);
      box.rect.h = std::max(1, y2 - box.rect.y);
    }
    sheet.scale = s;
    sheet.label_height_px = std::max(1, static_cast<int>(std::floor(layout.label_height_px * s)));
  }
  return sheet;
}

}  // namespace

Raster render_example_panel(const Raster& drawing, const std::string& title,
                            const std::string& caption, const PanelLayout& layout) {
  check_layout(layout);
  return render_panel(drawing, title, caption, layout);
}

Raster render_test_panel(const Raster& drawing, const std::string& title,
                         const PanelLayout& layout) {
  check_layout(layout);
  return render_panel(drawing, title, std::string(), layout);
}

ComposedSheet compose_reference_sheet(const TaskDefinition& task, const PanelLayout& layout,
                                      bool include_examples) {
  check_layout(layout);
  const bool with_examples = include_examples && !task.examples.empty();
  if (with_examples && task.examples.size() != 9)
    raise(Errc::InvalidTask, "reference sheet needs exactly 9 examples, task " + task.task_id +
                                 " has " + std::to_string(task.examples.size()));

  // Context block: problem text wrapped over the grid width, context image below.
  const int grid_cols = with_examples ? layout.columns : 1;
  const int block_w = grid_cols * layout.max_panel_width_px + (grid_cols - 1) * layout.padding_px;

  Raster context_img;
  try {
    context_img = decode_image_file(task.resolve(task.context_image));
  } catch (const Error& e) {
    raise(Errc::UndecodableImage, "context image for task " + task.task_id + ": " + e.what());
  }
  const Raster context_scaled = fit_to_width(context_img, block_w);
  const auto text_lines = wrap_text(task.context_text, block_w - 4, kCaptionFontScale);
  const int text_h = static_cast<int>(text_lines.size()) * kCaptionLineHeight + 6;

  Raster block = Raster::solid(block_w, text_h + context_scaled.height, kWhite);
  for (std::size_t i = 0; i < text_lines.size(); ++i)
    draw_text(block, text_lines[i], 2, kCaptionLineHeight * static_cast<int>(i + 1),
              kCaptionFontScale, kBlack);
  blit(block, context_scaled, (block_w - context_scaled.width) / 2, text_h);

  std::vector<Placed> panels;
  if (with_examples) {
    for (std::size_t i = 0; i < task.examples.size(); ++i) {
      const auto& example = task.examples[i];
      Raster drawing;
      try {
        drawing = decode_image_file(task.resolve(example.drawing));
      } catch (const Error& e) {
        raise(Errc::UndecodableImage,
              "example " + std::to_string(i + 1) + " of task " + task.task_id + ": " + e.what());
      }
      const std::string title = "Example " + std::to_string(i + 1) + ": " +
                                std::string(assess::level_name(example.label));
      panels.push_back({render_panel(drawing, title, example.rationale, layout),
                        static_cast<int>(i + 1),
                        std::string()});
    }
  }
  return assemble(SheetKind::Reference, &block, std::move(panels), layout);
}

ComposedSheet compose_test_sheet(const data::Batch& batch, const PanelLayout& layout) {
  check_layout(layout);
  if (batch.cases.empty()) raise(Errc::InvalidRequest, "test sheet needs at least one case");
  if (batch.cases.size() > static_cast<std::size_t>(data::kMaxBatchSize))
    raise(Errc::BatchTooLarge, "batch " + std::to_string(batch.batch_id) + " holds " +
                                   std::to_string(batch.cases.size()) + " cases, limit is " +
                                   std::to_string(data::kMaxBatchSize));

  std::vector<Placed> panels;
  for (std::size_t i = 0; i < batch.cases.size(); ++i) {
    const auto& rec = batch.cases[i];
    Raster drawing;
    try {
      drawing = decode_image_file(rec.image_path);
    } catch (const Error& e) {
      raise(Errc::UndecodableImage, "case " + rec.case_id + ": " + e.what());
    }
    const std::string title = "Drawing " + std::to_string(i + 1);
    panels.push_back({render_panel(drawing, title, std::string(), layout),
                      static_cast<int>(i + 1), rec.case_id});
  }
  return assemble(SheetKind::Test, nullptr, std::move(panels), layout);
}

std::vector<assess::Finding> verify_sheet(const ComposedSheet& sheet) {
  std::vector<assess::Finding> findings;

  const Raster decoded = decode_image_bytes(encode_png(sheet.image));
  if (decoded.width != sheet.image.width || decoded.height != sheet.image.height ||
      decoded.rgb != sheet.image.rgb)
    findings.push_back({"EncodingMismatch", "png round-trip altered the sheet pixels"});

  const Rect bounds = sheet.image.bounds();
  for (const auto& box : sheet.panel_boxes) {
    if (!bounds.contains(box.rect))
      findings.push_back({"PanelOutOfBounds", "panel " + std::to_string(box.index)});
  }
  for (std::size_t i = 0; i < sheet.panel_boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < sheet.panel_boxes.size(); ++j) {
      if (sheet.panel_boxes[i].rect.intersects(sheet.panel_boxes[j].rect))
        findings.push_back({"OverlappingPanels",
                            "panels " + std::to_string(sheet.panel_boxes[i].index) + " and " +
                                std::to_string(sheet.panel_boxes[j].index)});
    }
  }

  if (sheet.label_height_px < kMinLegibleLabelPx)
    findings.push_back({"LabelTooSmall", "label strip is " + std::to_string(sheet.label_height_px) +
                                             " px, minimum legible is " +
                                             std::to_string(kMinLegibleLabelPx)});

  for (const auto& box : sheet.panel_boxes) {
    if (box.index == 0) continue;  // context region carries no label strip
    if (!bounds.contains(box.rect)) continue;
    const int strip_h = std::min(sheet.label_height_px, box.rect.h);
    if (strip_h <= 0) continue;
    const Raster strip = crop(sheet.image, {box.rect.x, box.rect.y, box.rect.w, strip_h});
    bool uniform = true;
    for (std::size_t p = 3; p < strip.rgb.size() && uniform; p += 3) {
      uniform = strip.rgb[p] == strip.rgb[0] && strip.rgb[p + 1] == strip.rgb[1] &&
                strip.rgb[p + 2] == strip.rgb[2];
    }
    if (uniform)
      findings.push_back({"BlankLabelStrip", "panel " + std::to_string(box.index)});
  }
  return findings;
}

void save_sheet(const ComposedSheet& sheet, const std::filesystem::path& png_path) {
  write_png(png_path, sheet.image);
  nlohmann::json sidecar;
  sidecar["sheet_kind"] = sheet.kind == SheetKind::Reference ? "reference" : "test";
  sidecar["panel_boxes"] = nlohmann::json::array();
  for (const auto& box : sheet.panel_boxes) {
    sidecar["panel_boxes"].push_back({{"index", box.index},
                                      {"x", box.rect.x},
                                      {"y", box.rect.y},
                                      {"w", box.rect.w},
                                      {"h", box.rect.h}});
  }
  sidecar["case_ids"] = sheet.case_ids;
  sidecar["scale"] = sheet.scale;
  std::ofstream out(png_path.string() + ".json", std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::PersistenceError, "cannot write sidecar for " + png_path.string());
  out << sidecar.dump(2) << '\n';
}

}  // namespace nerif::sheet
