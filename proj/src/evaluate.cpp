#include "dimo/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <thread>

namespace dimo {

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

SampleRecord blank_record(const Sample& s) {
  SampleRecord r;
  r.id = s.id;
  r.group = s.group;
  r.modality = s.modality;
  return r;
}

}  // namespace

std::optional<double> Cell::accuracy() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits) / total;
}

Cell& Cell::operator+=(const Cell& other) {
  hits += other.hits;
  total += other.total;
  return *this;
}

Cell GroupCells::combined() const {
  Cell c = text;
  c += icon;
  return c;
}

EvalReport aggregate(std::vector<SampleRecord> records, std::string label,
                     const EngineConfig& config) {
  std::sort(records.begin(), records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
  EvalReport report;
  report.label = std::move(label);
  report.config = config;
  for (const auto& r : records) {
    auto& group = report.groups[r.group];
    Cell& cell = r.modality == ModalityLabel::Text ? group.text : group.icon;
    Cell& overall = r.modality == ModalityLabel::Text ? report.overall_text : report.overall_icon;
    cell.total += 1;
    overall.total += 1;
    if (r.hit) {
      cell.hits += 1;
      overall.hits += 1;
    }
  }
  report.overall = report.overall_text;
  report.overall += report.overall_icon;
  report.samples = std::move(records);
  return report;
}

std::vector<EvalReport> evaluate_many(const std::vector<Sample>& samples,
                                      const std::vector<EngineConfig>& configs,
                                      const BackendProvider& backend,
                                      const EvalOptions& options,
                                      const std::vector<std::string>& labels) {
  if (options.parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  for (const auto& c : configs) c.validate();
  const auto start = std::chrono::steady_clock::now();

  const ImageSource images =
      options.images ? options.images : [](const Sample& s) { return load_image(s.image_path); };

  // records[config][sample]
  std::vector<std::vector<std::optional<SampleRecord>>> records(
      configs.size(), std::vector<std::optional<SampleRecord>>(samples.size()));
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;

  const auto notify = [&](const Sample& s, std::size_t ci, const GroundingResult* result,
                          const SampleRecord& rec) {
    if (!options.on_episode) return;
    std::lock_guard lock(callback_mutex);
    options.on_episode(s, ci, result, rec);
  };

  const auto worker = [&] {
    while (true) {
      if (options.cancel && options.cancel->load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= samples.size()) return;
      const Sample& s = samples[i];

      std::optional<Image> image;
      std::string image_error;
      try {
        image = images(s);
      } catch (const std::exception& e) {
        image_error = e.what();
      }

      for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        SampleRecord rec = blank_record(s);
        const auto t0 = std::chrono::steady_clock::now();
        std::optional<GroundingResult> result;
        if (!image) {
          rec.error = "image: " + image_error;
        } else {
          try {
            auto b = backend(s, ci);
            result = ground(*image, s.instruction, configs[ci], *b);
            rec.final_point = result->final_point;
            rec.hit = point_in_box(result->final_point, s.gt_box);
            rec.iterations = result->iterations_used();
          } catch (const std::exception& e) {
            rec.error = e.what();
          }
        }
        rec.wall_ms = ms_since(t0);
        notify(s, ci, result ? &*result : nullptr, rec);
        records[ci][i] = std::move(rec);
      }
    }
  };

  const int threads = std::min<int>(options.parallelism, std::max<std::size_t>(samples.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<EvalReport> reports;
  reports.reserve(configs.size());
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    std::vector<SampleRecord> done;
    bool complete = true;
    for (auto& r : records[ci]) {
      if (r) {
        done.push_back(std::move(*r));
      } else {
        complete = false;
      }
    }
    EvalReport report = aggregate(std::move(done), ci < labels.size() ? labels[ci] : to_string(configs[ci].mode), configs[ci]);
    report.complete = complete;
    report.wall_ms = ms_since(start);
    reports.push_back(std::move(report));
  }
  return reports;
}

EvalReport evaluate(const std::vector<Sample>& samples, const EngineConfig& config,
                    const BackendProvider& backend, const EvalOptions& options) {
  return std::move(evaluate_many(samples, {config}, backend, options).front());
}

}  // namespace dimo
