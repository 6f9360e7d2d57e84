#pragma once

#include "bytetrace/summary.hpp"

#include <string>

namespace bytetrace {

/// Instruction listing as it appears in the prompt: one raw line each.
inline std::string render_instructions(const MethodRecord& m)
{
    std::string out;
    for (const auto& ins : m.instructions) {
        if (!out.empty()) {
            out += '\n';
        }
        out += ins.raw_text;
    }
    return out;
}

/// Worked examples embedded in every prompt. Kept short and built on
/// placeholder classes so that rule 4 ("do not reuse examples") can hold.
inline constexpr std::string_view few_shot_examples =
        "**Examples:**\n"
        "Example A (data passed on):\n"
        "- Bytecode Instructions: invoke-virtual {p1}, "
        "Landroid/location/Location;->getLatitude()D | move-result-wide v0 | "
        "invoke-static {v0, v1}, Lcom/example/Geo;->keep(D)V\n"
        "- Output: {\"Summary\": \"Latitude is obtained with getLatitude() and "
        "stored in v0, then passed to keep().\", \"Next Methods\": "
        "[\"Lcom/example/Geo;->keep:(D)V\"]}\n"
        "Example B (sink hit):\n"
        "- Bytecode Instructions: invoke-virtual {v1}, "
        "Landroid/telephony/TelephonyManager;->getDeviceId()Ljava/lang/String; | "
        "move-result-object v0 | const-string v2, \"TAG\" | "
        "invoke-static {v2, v0}, "
        "Landroid/util/Log;->i(Ljava/lang/String;Ljava/lang/String;)I\n"
        "- Output: {\"Summary\": \"The device ID is read into v0 and logged "
        "with Landroid/util/Log;->i:(Ljava/lang/String;Ljava/lang/String;)I. "
        "Sink hit.\", \"Next Methods\": []}\n\n";

/// Method-analysis prompt: chain-of-thought template with the scoped fields
/// of one request substituted. Pure function of the request.
inline std::string build_prompt(const SummaryRequest& req)
{
    const auto& m = req.record();
    std::string p;
    p += "You are an expert in analyzing Android bytecode instructions. Your "
         "task is to trace how sensitive user data is originated, "
         "moved through registers, passed between methods, and possibly "
         "reaches sinks (e.g., logging, network, or storage).\n\n";
    p += "**Chain of Thought Process:**\n\n";
    p += "**1. Understand Context:**\n";
    p += "- Previous Summary: " + req.previous_summary + "\n";
    p += "- Method Signature: " + m.signature.str() + "\n";
    p += "- Bytecode Instructions: " + render_instructions(m) + "\n";
    p += "- Goal: Output JSON with 'Summary' and 'Next Methods'.\n\n";
    p += "**2. Identify Data Origin:**\n";
    p += "- Look for sensitive API calls (e.g., location, contacts, device "
         "ID).\n";
    p += "- Note data type, origin method, and the register it's stored in.\n";
    p += "- If no origin, check if sensitive data may come via parameters "
         "(from `Previous Summary`).\n\n";
    p += "**3. Track Data Storage:**\n";
    p += "- If sensitive data found, trace its flow (via `move-*`, `iput-*`, "
         "`sput-*`, etc.).\n\n";
    p += "**4. List Invoked Methods:**\n";
    p += "- Extract full method signatures from invoke-* calls.\n";
    p += "- Note which are passed sensitive registers.\n\n";
    p += "**5. Filter Next Methods:**\n";
    p += "- Exclude: `Landroid/*`, `Landroidx/*`, `Lkotlin/*`.\n";
    p += "- Only keep directly invoked methods.\n";
    p += "- If none left, use `[]`.\n\n";
    p += "**6. Detect Sinks:**\n";
    p += "- Check if sensitive data is passed to sinks like:\n";
    p += "  - Logging \n";
    p += "  - Network Transmission \n";
    p += "  - Storage \n";
    p += "- Return statements are not sinks.\n\n";
    p += "**7. Finalize 'Next Methods':**\n";
    p += "- If sink is hit with sensitive data, set `Next Methods` to `[]`.\n";
    p += "- Otherwise, keep filtered method list.\n\n";
    p += "**8. Construct Summary:**\n";
    p += "- Describe origin, movement, and whether sensitive data was passed "
         "or leaked.\n";
    p += "- If none observed, state it clearly.\n\n";
    p += few_shot_examples;
    p += "### Output Format:\n";
    p += "```json\n";
    p += "{\n";
    p += "    \"Summary\": \"[Summary of analysis based on the thought "
         "process]\",\n";
    p += "    \"Next Methods\": "
         "[\"FullyQualifiedClass->methodName:(params)returnType\"]\n";
    p += "}\n";
    p += "```\n\n";
    p += "- No markdown, code fences, or extra text.\n";
    p += "- Complete method signatures only.\n";
    p += "- JSON must be valid and standalone.\n\n";
    p += "**STRICT RULES:**\n";
    p += "1. Output only the JSON object. No explanation, markdown, or "
         "commentary.\n";
    p += "2. Method signatures: full, exact, no guessing, no truncation.\n";
    p += "3. `Next Methods = []` if a sink is hit.\n";
    p += "4. Do not reuse examples from the prompt.\n";
    return p;
}

} // namespace bytetrace
