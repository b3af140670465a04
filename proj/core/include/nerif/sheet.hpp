#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nerif/assessment.hpp"
#include "nerif/dataset.hpp"
#include "nerif/raster.hpp"

namespace nerif::sheet {

using assess::TaskDefinition;

/// Grid geometry. The paper only shows screenshots; these are configuration
/// with working defaults.
struct PanelLayout {
  int columns = 3;
  int padding_px = 16;
  int label_height_px = 28;
  int max_panel_width_px = 320;
  int max_side_px = 2048;  // longest output side; larger sheets are downscaled
};

enum class SheetKind {
  Reference,
  Test,
};

struct PanelBox {
  int index = 0;  // 0 is the context region on reference sheets; panels are 1-based
  Rect rect;
};

/// A composite attachment plus the geometry and bookkeeping needed to audit
/// it. The batch-position-to-case_id map lives here (and in the JSON sidecar)
/// so scoring never depends on pixels.
struct ComposedSheet {
  SheetKind kind = SheetKind::Reference;
  Raster image;
  std::vector<PanelBox> panel_boxes;
  std::vector<std::string> case_ids;  // test sheets only, batch order
  double scale = 1.0;                 // downscale factor applied to meet max_side_px
  int label_height_px = 0;            // effective (post-scale) label strip height
};

/// Problem context on top (text plus context image), then the nine example
/// panels in a `columns`-wide grid, each captioned with its human label and
/// rationale. With include_examples false (or a task with no examples) the
/// sheet holds the context region only.
ComposedSheet compose_reference_sheet(const TaskDefinition& task, const PanelLayout& layout,
                                      bool include_examples = true);

/// One row of up to three drawings, each headed by the literal label
/// "Drawing N" in batch order. Throws BatchTooLarge beyond three.
ComposedSheet compose_test_sheet(const data::Batch& batch, const PanelLayout& layout);

/// Self-check of a composed sheet: the PNG encoding must decode back to the
/// same pixels, panel boxes must sit inside the image and not overlap, and
/// label strips must be legible and non-blank.
/// Codes: EncodingMismatch, PanelOutOfBounds, OverlappingPanels,
/// LabelTooSmall, BlankLabelStrip.
std::vector<assess::Finding> verify_sheet(const ComposedSheet& sheet);

/// Standalone panel renderers; compose_* blits their output unchanged, so a
/// crop of the sheet at a panel box reproduces these pixel for pixel.
Raster render_example_panel(const Raster& drawing, const std::string& title,
                            const std::string& caption, const PanelLayout& layout);
Raster render_test_panel(const Raster& drawing, const std::string& title,
                         const PanelLayout& layout);

/// Write `<path>` (PNG) plus `<path>.json` sidecar with
/// {sheet_kind, panel_boxes, case_ids}.
void save_sheet(const ComposedSheet& sheet, const std::filesystem::path& png_path);

}  // namespace nerif::sheet
