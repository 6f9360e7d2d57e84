#include "support.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace bt_test;

namespace {

const char* kApp = R"(.class La/B;
.method static c()V
    .locals 0
    return-void
.end method
.method static root(Landroid/location/Location;)V
    .locals 2
    invoke-virtual {p0}, Landroid/location/Location;->getLatitude()D
    move-result-wide v0
    invoke-static {}, La/B;->c()V
    return-void
.end method
)";

SummaryRequest request(const MethodIndex& idx, const std::string& sig, std::string prev = {})
{
    auto loc = api("Landroid/location/Location;->getLatitude", "Location");
    return {*idx.find(sig), std::move(prev), "Location", loc};
}

} // namespace

TEST(Prompt, CarriesTheOutputSchemaAndScopedFields)
{
    auto idx = index_from(kApp);
    auto p = build_prompt(request(idx, "La/B;->root:(Landroid/location/Location;)V"));
    EXPECT_NE(p.find(R"("Summary": "[Summary of analysis based on the thought process]",)"), std::string::npos);
    EXPECT_NE(p.find(R"("Next Methods": ["FullyQualifiedClass->methodName:(params)returnType"])"),
              std::string::npos);
    EXPECT_NE(p.find("- Previous Summary: \n"), std::string::npos);
    EXPECT_NE(p.find("- Method Signature: La/B;->root:(Landroid/location/Location;)V\n"), std::string::npos);
    EXPECT_NE(p.find("- Bytecode Instructions: invoke-virtual {p0}, Landroid/location/Location;->getLatitude()D\n"
                     "move-result-wide v0\ninvoke-static {}, La/B;->c()V\nreturn-void\n"),
              std::string::npos);
    EXPECT_NE(p.find("- Exclude: `Landroid/*`, `Landroidx/*`, `Lkotlin/*`."), std::string::npos);
    EXPECT_NE(p.find("3. `Next Methods = []` if a sink is hit."), std::string::npos);
    EXPECT_LT(p.find("**Examples:**"), p.find("### Output Format:"));
}

TEST(Prompt, PreviousSummaryIsSubstitutedVerbatim)
{
    auto idx = index_from(kApp);
    auto p = build_prompt(request(idx, "La/B;->c:()V", "Latitude arrives in p0."));
    EXPECT_NE(p.find("- Previous Summary: Latitude arrives in p0.\n"), std::string::npos);
}

TEST(Prompt, IsAPureFunction)
{
    auto idx = index_from(kApp);
    auto r = request(idx, "La/B;->root:(Landroid/location/Location;)V", "x");
    EXPECT_EQ(build_prompt(r), build_prompt(r));
}

TEST(ParseResponse, HallucinatedMethodIsDropped)
{
    auto idx = index_from(kApp);
    DropLog drops;
    auto r = parse_response(R"({"Summary": "passes data", "Next Methods": ["La/B;->c:()V", "La/X;->y:()V"]})",
                            idx, drops, {default_sink_rules(), true, "La/B;->root:(Landroid/location/Location;)V"});
    ASSERT_EQ(r.next_methods.size(), 1u);
    EXPECT_EQ(r.next_methods[0].str(), "La/B;->c:()V");
    ASSERT_EQ(drops.entries().size(), 1u);
    EXPECT_EQ(drops.entries()[0].entry, "La/X;->y:()V");
    EXPECT_EQ(drops.entries()[0].reason, DropReason::NotInIndex);
    EXPECT_EQ(to_string(DropReason::NotInIndex), "hallucination");
    EXPECT_EQ(drops.entries()[0].method, "La/B;->root:(Landroid/location/Location;)V");
}

TEST(ParseResponse, SchemaMinimum)
{
    DropLog drops;
    auto r = parse_response(R"({"Summary":"nothing here","Next Methods":[]})", index_from(kApp), drops);
    EXPECT_TRUE(r.next_methods.empty());
    EXPECT_TRUE(r.sinks.empty());
    EXPECT_FALSE(r.leak_here);
    EXPECT_EQ(r.summary, "nothing here");
}

TEST(ParseResponse, FrameworkEntriesAreFiltered)
{
    DropLog drops;
    auto r = parse_response(R"({"Summary":"s","Next Methods":["Landroid/util/Log;->d:(Ljava/lang/String;Ljava/lang/String;)I",
        "Landroidx/a/B;->c()V", "Lkotlin/io/C;->d()V", "not-a-sig", 42, "La/B;->c()V", "La/B;->c:()V"]})",
                            index_from(kApp), drops);
    ASSERT_EQ(r.next_methods.size(), 1u);
    EXPECT_EQ(drops.count(DropReason::Framework), 3u);
    EXPECT_EQ(drops.count(DropReason::BadSignature), 2u);
    EXPECT_EQ(drops.count(DropReason::NotInIndex), 0u);
}

TEST(ParseResponse, FencesAndSurroundingChatter)
{
    DropLog drops;
    auto r = parse_response("```json\n{\"Summary\": \"ok\", \"Next Methods\": [\"La/B;->c:()V\"]}\n```",
                            index_from(kApp), drops);
    EXPECT_EQ(r.next_methods.size(), 1u);
    r = parse_response("Sure! {\"Summary\": \"ok\", \"Next Methods\": []} Hope this helps.", index_from(kApp),
                       drops);
    EXPECT_EQ(r.summary, "ok");
}

TEST(ParseResponse, InvalidOutputs)
{
    auto idx = index_from(kApp);
    DropLog drops;
    for (const char* bad : {"", "no json at all", "{\"Summary\": 3, \"Next Methods\": []}",
                            "{\"Next Methods\": []}", "{\"Summary\": \"x\"}",
                            "{\"Summary\": \"x\", \"Next Methods\": \"La/B;->c:()V\"}", "{\"Summary\": \"x\",",
                            "[1, 2]", "{\"Summary\": \"x\", \"Next Methods\": [], \"Sinks\": {}}"}) {
        EXPECT_THROW(parse_response(bad, idx, drops), InvalidResponse) << bad;
    }
}

TEST(ParseResponse, SinkInTextTerminatesExpansion)
{
    DropLog drops;
    auto r = parse_response(R"({"Summary": "Latitude is converted and logged via Landroid/util/Log;->d(Ljava/lang/String;Ljava/lang/String;)I. Sink hit.",
                                "Next Methods": ["La/B;->c:()V"]})",
                            index_from(kApp), drops);
    ASSERT_EQ(r.sinks.size(), 1u);
    EXPECT_EQ(r.sinks[0].sink_ref.str(), "Landroid/util/Log;->d:(Ljava/lang/String;Ljava/lang/String;)I");
    EXPECT_EQ(r.sinks[0].category, SinkCategory::Logging);
    EXPECT_TRUE(r.leak_here);
    EXPECT_TRUE(r.next_methods.empty());
    EXPECT_EQ(drops.count(DropReason::SinkLeaf), 1u);

    auto text = extract_sinks_from_text("The value is written with Log.w (tag, value). Then nothing.",
                                        default_sink_rules());
    ASSERT_EQ(text.size(), 1u);
    EXPECT_EQ(text[0].sink_ref.str(), "Landroid/util/Log;->w:(Ljava/lang/String;Ljava/lang/String;)I");
    EXPECT_EQ(text[0].evidence, "The value is written with Log.w (tag, value).");
    EXPECT_TRUE(extract_sinks_from_text("Passed to La/B;->c:()V only.", default_sink_rules()).empty());
}

TEST(ParseResponse, ExplicitSinksArray)
{
    DropLog drops;
    ResponseOptions opts;
    opts.sink_terminates = false;
    auto r = parse_response(R"js({"Summary": "Log.d is mentioned but the explicit list wins",
        "Next Methods": ["La/B;->c:()V"],
        "Sinks": [{"signature": "Ljava/net/URL;-><init>(Ljava/lang/String;)V", "category": "Transmission", "evidence": "new URL(v1)"},
                  {"signature": "bogus", "category": "Logging"},
                  {"signature": "Ljava/io/File;->a()V", "category": "Teleport"}]})js",
                            index_from(kApp), drops, opts);
    ASSERT_EQ(r.sinks.size(), 1u);
    EXPECT_EQ(r.sinks[0].category, SinkCategory::Transmission);
    EXPECT_EQ(r.sinks[0].evidence, "new URL(v1)");
    EXPECT_EQ(drops.count(DropReason::BadSink), 2u);
    EXPECT_TRUE(r.leak_here);
    EXPECT_EQ(r.next_methods.size(), 1u);
}

TEST(SummaryJson, KeysAndValues)
{
    SummaryResult r;
    r.summary = "s";
    r.next_methods = {parse_method_ref("La/B;->c()V")};
    r.sinks = {{parse_method_ref("Landroid/util/Log;->i(Ljava/lang/String;Ljava/lang/String;)I"),
                SinkCategory::Logging, "ev"}};
    r.leak_here = true;
    auto j = to_json(r);
    EXPECT_EQ(j["Summary"], "s");
    EXPECT_EQ(j["Next Methods"][0], "La/B;->c:()V");
    EXPECT_EQ(j["Sinks"][0]["category"], "Logging");
    EXPECT_EQ(j["Leak"], true);
}

TEST(SinkRules, DefaultLookups)
{
    const auto rules = default_sink_rules();
    EXPECT_EQ(match_sink(rules, parse_method_ref("Landroid/util/Log;->d:(Ljava/lang/String;Ljava/lang/String;)I")),
              SinkCategory::Logging);
    EXPECT_FALSE(match_sink(rules, parse_method_ref("Lcom/example/App;->foo:()V")));
    EXPECT_EQ(match_sink(rules, parse_method_ref("Lcom/google/android/gms/wearable/MessageApi;->sendMessage:"
                                                 "(Lcom/google/android/gms/common/api/GoogleApiClient;"
                                                 "Ljava/lang/String;Ljava/lang/String;[B)"
                                                 "Lcom/google/android/gms/common/api/PendingResult;")),
              SinkCategory::Transmission);
    EXPECT_EQ(match_sink(rules, parse_method_ref("Ljava/io/FileOutputStream;->write([B)V")), SinkCategory::Storage);
    EXPECT_EQ(match_sink(rules, parse_method_ref("Landroid/content/SharedPreferences$Editor;->putString"
                                                 "(Ljava/lang/String;Ljava/lang/String;)"
                                                 "Landroid/content/SharedPreferences$Editor;")),
              SinkCategory::Storage);
    EXPECT_FALSE(match_sink(rules, parse_method_ref("Landroid/widget/TextView;->setText(Ljava/lang/CharSequence;)V")));
}

TEST(SinkRules, ShippedFileEqualsDefaults)
{
    EXPECT_EQ(load_sink_rules(fs::path(BYTETRACE_DATA_DIR) / "sinks.json"), default_sink_rules());
}

TEST(SinkRules, ParsingAndSignatureRules)
{
    auto rules = parse_sink_rules(nlohmann::json::parse(
            R"([{"match": "La/pp/Helper;->send(Ljava/lang/String;)V", "category": "Transmission"}])"));
    ASSERT_EQ(rules.size(), 1u);
    EXPECT_EQ(rules[0].match, "La/pp/Helper;->send:(Ljava/lang/String;)V");
    EXPECT_TRUE(match_sink(rules, parse_method_ref("La/pp/Helper;->send(Ljava/lang/String;)V")));
    EXPECT_FALSE(match_sink(rules, parse_method_ref("La/pp/Helper;->send(I)V")));
    for (const char* bad : {R"({})", R"([{"category": "Logging"}])", R"([{"match": "Lx/", "category": "Other"}])",
                            R"([{"match": "Lx;->(", "category": "Logging"}])", R"([3])"}) {
        EXPECT_THROW(parse_sink_rules(nlohmann::json::parse(bad)), BadConfig) << bad;
    }
}

namespace {

class CountingBackend : public SummarizerBackend {
public:
    std::atomic<int> calls{0};
    std::string identity() const override { return "counting"; }
    SummaryResult summarize(const SummaryRequest& req, const MethodIndex&, DropLog&) override
    {
        ++calls;
        SummaryResult r;
        r.summary = "seen " + req.record().signature.str() + " after '" + req.previous_summary + "'";
        // Contract violations that the front end must repair.
        r.next_methods = {parse_method_ref("La/B;->c()V"), parse_method_ref("La/B;->c()V"),
                          parse_method_ref("La/Ghost;->x()V"), parse_method_ref("Landroid/a/B;->c()V")};
        return r;
    }
};

} // namespace

TEST(Summarizer, CachesPerKeyAndEnforcesContract)
{
    auto idx = index_from(kApp);
    CountingBackend backend;
    Summarizer s(backend, idx);
    auto req = request(idx, "La/B;->root:(Landroid/location/Location;)V");
    auto a = s.summarize(req);
    auto b = s.summarize(req);
    EXPECT_EQ(backend.calls, 1);
    EXPECT_EQ(s.cache_hits(), 1u);
    EXPECT_EQ(a.summary, b.summary);
    ASSERT_EQ(a.next_methods.size(), 1u);
    EXPECT_EQ(s.drops().count(DropReason::NotInIndex), 1u);
    EXPECT_EQ(s.drops().count(DropReason::Framework), 1u);

    s.summarize(request(idx, "La/B;->root:(Landroid/location/Location;)V", "other context"));
    EXPECT_EQ(backend.calls, 2);
    auto other_api = req;
    other_api.root_api = api("Landroid/location/Location;->getLongitude", "Location");
    s.summarize(other_api);
    EXPECT_EQ(backend.calls, 3);
    auto continuing = req;
    continuing.sink_terminates = false;
    s.summarize(continuing);
    EXPECT_EQ(backend.calls, 4);
}

TEST(Summarizer, ConcurrentCallersSeeOneResult)
{
    auto idx = index_from(kApp);
    CountingBackend backend;
    Summarizer s(backend, idx);
    auto req = request(idx, "La/B;->c:()V");
    std::vector<SummaryResult> results(8);
    {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < results.size(); ++i) {
            pool.emplace_back([&, i] { results[i] = s.summarize(req); });
        }
    }
    for (const auto& r : results) {
        EXPECT_EQ(r, results[0]);
    }
    EXPECT_EQ(s.backend_calls() + s.cache_hits(), results.size());
}
