#include "lumber/backend.hpp"

#include <nlohmann/json.hpp>

#include "io.hpp"
#include "lumber/hash.hpp"

namespace lumber {

std::string prompt_hash(std::string_view system, std::string_view prompt) {
    std::string material;
    material.reserve(system.size() + prompt.size() + 1);
    material.append(system);
    material.push_back('\0');
    material.append(prompt);
    return sha256_hex(material);
}

ScriptedBackend::ScriptedBackend(Script script, std::string model)
    : script_(std::move(script)), model_(std::move(model)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_prompt(
    std::function<std::string(std::string_view prompt)> fn, std::string model) {
    return std::make_unique<ScriptedBackend>(
        [fn = std::move(fn)](std::string_view, std::string_view prompt) { return fn(prompt); },
        std::move(model));
}

std::string ScriptedBackend::do_complete(std::string_view system, std::string_view prompt,
                                         double) {
    ++calls_;
    return script_(system, prompt);
}

ResponseCache::ResponseCache(std::filesystem::path file, Mode mode)
    : file_(std::move(file)), mode_(mode) {
    if (!std::filesystem::exists(*file_)) return;
    std::string content = io::read_file(*file_);
    std::size_t line_no = 0;
    for (std::string_view line : io::lines(content)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
            entries_[key(record.at("model").get<std::string>(),
                         record.at("prompt_hash").get<std::string>())] =
                record.at("response").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(file_->string(), line_no, e.what());
        }
    }
}

std::string ResponseCache::key(const std::string& model, const std::string& hash) {
    return model + '\x1f' + hash;
}

std::optional<std::string> ResponseCache::lookup(const std::string& model,
                                                 const std::string& hash) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key(model, hash));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::store(const std::string& model, const std::string& hash,
                          const std::string& response) {
    std::lock_guard lock(mutex_);
    entries_.insert_or_assign(key(model, hash), response);
    if (!file_ || mode_ == Mode::read_only) return;
    nlohmann::ordered_json record;
    record["model"] = model;
    record["prompt_hash"] = hash;
    record["response"] = response;
    io::append_line(*file_, record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string CachingBackend::do_complete(std::string_view system, std::string_view prompt,
                                        double temperature) {
    std::string model = inner_.model_id();
    std::string hash = prompt_hash(system, prompt);
    if (auto cached = cache_.lookup(model, hash)) {
        ++hits_;
        return *cached;
    }
    ++misses_;
    std::string response = inner_.complete(system, prompt, temperature);
    cache_.store(model, hash, response);
    return response;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& cache_file, std::string model)
    : cache_(cache_file, ResponseCache::Mode::read_only), model_(std::move(model)) {
    if (!std::filesystem::exists(cache_file)) {
        throw BackendError("replay cache '" + cache_file.string() + "' does not exist");
    }
}

std::string ReplayBackend::do_complete(std::string_view system, std::string_view prompt, double) {
    std::string hash = prompt_hash(system, prompt);
    if (auto cached = cache_.lookup(model_, hash)) return *cached;
    throw BackendError("no cached response for model '" + model_ + "', prompt " + hash);
}

}  // namespace lumber
