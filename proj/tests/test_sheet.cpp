#include <doctest.h>

#include <fstream>

#include "nerif/error.hpp"
#include "nerif/sheet.hpp"
#include "testutil.hpp"

using namespace nerif;
using testutil::TempDir;

namespace {

bool has_finding(const std::vector<assess::Finding>& findings, const std::string& code) {
  for (const auto& f : findings)
    if (f.code == code) return true;
  return false;
}

data::Batch batch_from(const TempDir& dir, int n) {
  data::Batch batch;
  batch.batch_id = 0;
  for (int i = 0; i < n; ++i) {
    const auto path = dir / ("case" + std::to_string(i) + ".png");
    testutil::write_image(path, 20 + 4 * i, 18, {static_cast<std::uint8_t>(50 * i), 90, 200});
    batch.cases.push_back(
        {"case-" + std::to_string(i), path, assess::ProficiencyLevel::Developing, "M3-1"});
  }
  return batch;
}

}  // namespace

TEST_CASE("reference sheet carries a context region and nine panels") {
  TempDir dir("sheet_ref");
  const auto task = testutil::make_task(dir.path(), "M3-1");
  sheet::PanelLayout layout;
  layout.max_panel_width_px = 80;

  const auto composed = sheet::compose_reference_sheet(task, layout);
  CHECK(composed.kind == sheet::SheetKind::Reference);
  REQUIRE(composed.panel_boxes.size() == 10);
  CHECK(composed.panel_boxes[0].index == 0);
  CHECK(composed.panel_boxes[9].index == 9);
  CHECK(sheet::verify_sheet(composed).empty());

  SUBCASE("identical drawings produce equally sized panels") {
    // the nine synthetic examples share one raster size by construction
    const auto& first = composed.panel_boxes[1].rect;
    for (std::size_t i = 2; i < composed.panel_boxes.size(); ++i) {
      CHECK(composed.panel_boxes[i].rect.w == first.w);
    }
  }
  SUBCASE("no-examples variant yields a context-only sheet") {
    const auto bare = sheet::compose_reference_sheet(task, layout, false);
    CHECK(bare.panel_boxes.size() == 1);
    CHECK(sheet::verify_sheet(bare).empty());
  }
  SUBCASE("example count other than nine is refused") {
    auto short_task = task;
    short_task.examples.pop_back();
    CHECK_THROWS_AS(sheet::compose_reference_sheet(short_task, layout), Error);
  }
  SUBCASE("panel crops match independently rendered panels pixel for pixel") {
    for (int i = 0; i < 9; ++i) {
      const auto& example = task.examples[i];
      const auto title = "Example " + std::to_string(i + 1) + ": " +
                         std::string(assess::level_name(example.label));
      const auto standalone = sheet::render_example_panel(
          decode_image_file(task.resolve(example.drawing)), title, example.rationale, layout);
      const auto cropped = crop(composed.image, composed.panel_boxes[i + 1].rect);
      CHECK(pixel_hash(cropped) == pixel_hash(standalone));
      CHECK(cropped.rgb == standalone.rgb);
    }
  }
}

TEST_CASE("test sheet lays out 1-3 labeled drawings in batch order") {
  TempDir dir("sheet_test");
  sheet::PanelLayout layout;
  layout.max_panel_width_px = 60;

  SUBCASE("batch of three") {
    const auto batch = batch_from(dir, 3);
    const auto composed = sheet::compose_test_sheet(batch, layout);
    CHECK(composed.kind == sheet::SheetKind::Test);
    REQUIRE(composed.panel_boxes.size() == 3);
    CHECK(composed.case_ids == std::vector<std::string>{"case-0", "case-1", "case-2"});
    for (int i = 0; i < 3; ++i) CHECK(composed.panel_boxes[i].index == i + 1);
    // left to right
    CHECK(composed.panel_boxes[0].rect.x < composed.panel_boxes[1].rect.x);
    CHECK(composed.panel_boxes[1].rect.x < composed.panel_boxes[2].rect.x);
    CHECK(sheet::verify_sheet(composed).empty());

    // round-trip geometry against the standalone renderer
    for (int i = 0; i < 3; ++i) {
      const auto standalone = sheet::render_test_panel(
          decode_image_file(batch.cases[i].image_path), "Drawing " + std::to_string(i + 1),
          layout);
      const auto cropped = crop(composed.image, composed.panel_boxes[i].rect);
      CHECK(cropped.rgb == standalone.rgb);
    }
  }
  SUBCASE("batch of one") {
    const auto composed = sheet::compose_test_sheet(batch_from(dir, 1), layout);
    CHECK(composed.panel_boxes.size() == 1);
    CHECK(sheet::verify_sheet(composed).empty());
  }
  SUBCASE("batch of four is refused") {
    try {
      sheet::compose_test_sheet(batch_from(dir, 4), layout);
      FAIL("expected BatchTooLarge");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::BatchTooLarge);
    }
  }
  SUBCASE("undecodable drawing names the case") {
    auto batch = batch_from(dir, 2);
    const auto garbage = dir / "broken.png";
    std::ofstream(garbage) << "not a png";
    batch.cases[1].image_path = garbage;
    try {
      sheet::compose_test_sheet(batch, layout);
      FAIL("expected UndecodableImage");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::UndecodableImage);
      CHECK(std::string(e.what()).find("case-1") != std::string::npos);
    }
  }
}

TEST_CASE("composition is deterministic down to the PNG bytes") {
  TempDir dir("sheet_det");
  sheet::PanelLayout layout;
  layout.max_panel_width_px = 60;
  const auto batch = batch_from(dir, 3);
  const auto a = sheet::compose_test_sheet(batch, layout);
  const auto b = sheet::compose_test_sheet(batch, layout);
  CHECK(encode_png(a.image) == encode_png(b.image));
}

TEST_CASE("verify_sheet flags corrupted geometry") {
  TempDir dir("sheet_verify");
  sheet::PanelLayout layout;
  layout.max_panel_width_px = 60;
  auto composed = sheet::compose_test_sheet(batch_from(dir, 2), layout);

  SUBCASE("overlap") {
    composed.panel_boxes[1].rect = composed.panel_boxes[0].rect;
    CHECK(has_finding(sheet::verify_sheet(composed), "OverlappingPanels"));
  }
  SUBCASE("out of bounds") {
    composed.panel_boxes[0].rect.x = composed.image.width - 1;
    CHECK(has_finding(sheet::verify_sheet(composed), "PanelOutOfBounds"));
  }
  SUBCASE("blank label strip") {
    // paint over the first panel's strip
    const auto& rect = composed.panel_boxes[0].rect;
    fill_rect(composed.image, {rect.x, rect.y, rect.w, composed.label_height_px}, kWhite);
    CHECK(has_finding(sheet::verify_sheet(composed), "BlankLabelStrip"));
  }
}

TEST_CASE("scale cap shrinks oversized sheets and flags illegible labels") {
  TempDir dir("sheet_scale");
  sheet::PanelLayout layout;
  layout.max_panel_width_px = 200;
  layout.max_side_px = 150;  // force a hard downscale
  const auto composed = sheet::compose_test_sheet(batch_from(dir, 3), layout);
  CHECK(std::max(composed.image.width, composed.image.height) <= 150);
  CHECK(composed.scale < 1.0);
  for (const auto& box : composed.panel_boxes)
    CHECK(composed.image.bounds().contains(box.rect));
  CHECK(has_finding(sheet::verify_sheet(composed), "LabelTooSmall"));
}

TEST_CASE("save_sheet writes the PNG plus a sidecar with the case map") {
  TempDir dir("sheet_save");
  sheet::PanelLayout layout;
  layout.max_panel_width_px = 60;
  const auto composed = sheet::compose_test_sheet(batch_from(dir, 2), layout);
  const auto png_path = dir / "sheet.png";
  sheet::save_sheet(composed, png_path);

  CHECK(std::filesystem::exists(png_path));
  const auto sidecar_path = png_path.string() + ".json";
  REQUIRE(std::filesystem::exists(sidecar_path));
  std::ifstream sidecar(sidecar_path);
  std::string body((std::istreambuf_iterator<char>(sidecar)), std::istreambuf_iterator<char>());
  CHECK(body.find("\"sheet_kind\": \"test\"") != std::string::npos);
  CHECK(body.find("case-0") != std::string::npos);
  CHECK(body.find("case-1") != std::string::npos);

  const auto decoded = decode_image_file(png_path);
  CHECK(decoded.rgb == composed.image.rgb);
}
