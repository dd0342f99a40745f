"""Chat prompt templates for generation and judging.

Rendering is deterministic and injection-safe: structured payloads are
serialized as JSON into the user turn, never spliced into instruction text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence


class PayloadError(Exception):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    system_text: str
    required_fields: tuple[str, ...]
    example_turns: tuple[tuple[str, str], ...] = ()  # (user, assistant)
    user_format: str = "{payload}"


def _dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False)


SITUATION_EXPAND_SYSTEM = (
    "You are an AI visual assistant tasked with expanding brief situational descriptions "
    "into 5 different detailed situation descriptions with human-object interactions within "
    "a 3D scene. Initially, the situation involves only one reference object, but your "
    "description should include at least two interacting objects. Exclude non-present "
    "objects. Each detailed description should be less than 20 words. The response should "
    "be in the format with 'S' is the detailed description and 'O' is the reference objects. "
    "Mention the directions (left, right, front, back) of all reference objects when "
    "standing. 'Interacting' should be an action conducted while standing, with the "
    "interacted object in front. Don't assume 'interacting' to be 'sitting'."
)

_SIT_EXAMPLE_DATA = {
    "windowsill_4": {"attributes": ["metal", "dark", "gray"], "location": "left"},
    "plant_7": {"attributes": ["tall"], "location": "left"},
    "plant_8": {"location": "left, within arm reach"},
    "beanbag_17": {"location": "left"},
    "table_19": {
        "attributes": ["wooden", "blue", "green", "rectangular", "low", "narrow"],
        "location": "front, within arm reach",
    },
    "cushion_20": {"location": "left, within arm reach"},
    "cushion_21": {"attributes": ["tall", "wide"], "location": "left"},
    "sofa_22": {
        "attributes": ["padded", "L-shaped", "orange", "pink", "wide"],
        "location": "below",
    },
    "tv_24": {"attributes": ["black"], "location": "front, far away"},
}

_SIT_EXAMPLE_ANSWER = (
    "'S': 'Sitting on the L-shaped sofa, watching TV far away.', 'O': 'sofa_22, tv_24' "
    "'S': 'Sitting on sofa, chatting with a person on the beanbag to my left.', 'O': 'sofa_22, beanbag_17' "
    "'S': 'Sitting on sofa with a windowsill to the left.', 'O': 'sofa_22, windowsill_4' "
    "'S': 'Sitting on sofa with two plants to the left.', 'O': 'sofa_22, plant_7, plant_8' "
    "'S': 'Sitting on the L-shaped sofa with a wooden table in the front within arm reach.', 'O': 'sofa_22, table_19' "
    "'S': 'Sitting on the L-shaped sofa with two cushions to the left.', 'O': 'sofa_22, cushion_20, cushion_21'"
)

_INTERACT_EXAMPLE_DATA = {
    "sink_7": {"attributes": ["white"], "location": "front, within arm reach"},
    "mirror_9": {"location": "front, within arm reach"},
    "toilet_13": {
        "attributes": ["seat down", "white", "tall", "wide"],
        "location": "left, within arm reach",
    },
    "bucket_14": {"location": "back, within arm reach"},
    "trash can_16": {"location": "front, within arm reach"},
}

_INTERACT_EXAMPLE_ANSWER = (
    "'S': 'Washing hands at the sink in the front within arm reach, and a trash can to the left by my feet.', "
    "'O': 'sink_7, trash can_16' "
    "'S': 'Cleaning the sink with a bucket behind me within arm reach.', 'O': 'sink_7, bucket_14' "
    "'S': 'Washing my face at the sink, while the toilet is to my left within arm's reach.', 'O': 'sink_7, toilet_13' "
    "'S': 'Washing hands at the sink with a mirror in the front within arm reach.', 'O': 'sink_7, mirror_9' "
    "'S': 'Washing hands at the sink, with a small shelf to my left.', 'O': 'sink_7, shelf_10'"
)

_STAND_EXAMPLE_DATA = {
    "kitchen counter_2": {
        "attributes": ["stone", "rectangular", "white", "low"],
        "location": "front, within arm reach",
    },
    "clutter_9": {"location": "front, within arm reach"},
    "clutter_11": {"location": "front, within arm reach"},
    "window_13": {"attributes": ["glass", "white"], "location": "right"},
    "garbage_16": {"attributes": ["cylindrical"], "location": "right"},
    "doorframe_22": {"attributes": ["rectangular", "white"], "location": "left"},
    "oven_24": {"attributes": ["black", "silver"], "location": "right, within arm reach"},
}

_STAND_EXAMPLE_ANSWER = (
    "'S': 'Baking in front of the kitchen counter, with an oven to my right within arm's reach.', "
    "'O': 'kitchen counter_2, oven_24' "
    "'S': 'Cooking in front of the kitchen counter, with the doorframe to my left.', 'O': 'kitchen counter_2, doorframe_22' "
    "'S': 'Cooking in front of the kitchen counter, with a window to my right.', 'O': 'kitchen counter_2, window_13' "
    "'S': 'Cooking in front of the kitchen counter, with a garbage to my right.', 'O': 'kitchen counter_2, garbage_16' "
    "'S': 'Standing in front of the kitchen counter, with two clutters also in the front within arm's reach.', "
    "'O': 'kitchen counter_2, clutter_9, clutter_11'"
)

LONGFORM_SYSTEM = (
    "You are an AI assistant tasked with generating captions of changes and instructions to "
    "rearrange changed objects in a 3D scene, based on the current location and orientation "
    "of the observer. This includes the vertical allocentric relationships among the objects, "
    "their horizontal locations (specified in degrees and distance) relative to the observer, "
    "and their attributes. Objects undergoing changes are classified into four categories: "
    "removed, added, rigid, and non-rigid. Always provide a caption ('C') that describes the "
    "change, including egocentric details, but exclude any rearrangement instructions ('R') "
    "for removed or added objects. To generate caption ('C'), rewrite 'Caption' to include at "
    "least one location with distance and clockwise direction: current ('location', "
    "'allocentric') or original ('location_old', 'allocentric_old'), and the distance in "
    "'return'. To generate 'C', don't use direction in 'return'.\n"
    "To generate rearrangement instruction ('R'), rewrite 'Instruction' to guide the user to "
    "reach the current 'location' of the changed object for the first step, then do 'return' "
    "to return the changed object, i.e. at least two steps for 'location' and 'return'. "
    "Mention the distance and direction of the movement ('location' and 'return').\n"
    "And only generate 'C' for objects that have the label 'Caption'. When generating "
    "instructions, please always specify the direction and distance of the movement. Please "
    "rewrite the numbers (direction and distance) in 'Caption' and 'Instruction' with the "
    "provided ones ('location', 'location_old', 'return'), adjust verbs (e.g., push/pull) to "
    "reflect the observer's perspective. The output should be formatted as 'O' (object), 'T' "
    "(type of change), 'C' (description of change), and 'R' (numbered rearrangement actions, "
    "e.g., '1., 2., 3.,...')"
)

_LONGFORM_EXAMPLE_DATA = {
    "removed": {
        "storage_22": {"location_old": "4 o'clock, 0.4m", "Caption": "incomplete scan"}
    },
    "rigid": {
        "table_7": {
            "attributes": ["wooden", "rectangular", "white"],
            "location": "10 o'clock, 0.9m",
            "location_old": "10 o'clock, 1.0m",
            "allocentric_old": "monitor_8 standing on table_7, picture_23 lying on table_7",
            "allocentric": "monitor_8 standing on table_7",
            "Caption": "The table is against the wall, with a computer on top of it, and the window is to the right.",
        },
        "chair_6": {
            "attributes": ["wide"],
            "location": "11 o'clock, 0.8m",
            "return": "2 o'clock, 0.5m",
            "location_old": "12 o'clock, 1.0m",
            "Caption": "The chair was previously by the window, and now it is directly in front of the table.",
            "Instruction": "Move it one step right to the window",
        },
    },
    "non_rigid": {
        "curtain_5": {
            "location": "11 o'clock, 1.5m",
            "allocentric": "curtain_5 hanging on wall_3",
            "Caption": "the change is not obvious",
        }
    },
    "unchanged": {"rail_33": {"location": "1 o'clock, 1.6m"}},
}

_LONGFORM_EXAMPLE_ANSWER = (
    "'O': 'storage_22', 'T': 'removed', 'C': 'The partially scanned storage at your 4 o'clock, "
    "0.6 meter away, may have been removed.' "
    "'O': 'table_7', 'T': 'rigid', 'C': 'The white table with a monitor on it at your 10 o'clock, "
    "1.5 m away hasn't changed its position, but the picture on it has been removed.' "
    "'O': 'chair_6', 'T': 'rigid', 'C': 'The chair, which was at your 11 o'clock, 1.4 meters away "
    "by the window, has been moved 0.5 meter to the front of the table.', 'R': 1. Turn to your "
    "front-left and take two steps, bypassing the couch half a step away. 2. Pick up the chair "
    "in front of the table. 3. Move the chair one step to your right, placing it beneath the "
    "window.' "
    "'O': 'curtain_5', 'T': 'nonrigid', 'C': 'The curtain on your 1 o'clock, 1.8 meters away, "
    "remains hanging on the wall.'"
)

QUERY_SYSTEM = (
    "You are an AI assistant tasked with generating queries about changes to a specific "
    "object. Given the object's name and a set of its features, generate one query per "
    "feature. The tense indicates whether the provided information refers to the state before "
    "(past) or after (present) the change. Use the tense accordingly when generating queries, "
    "especially by referencing the spatial relation of the object (e.g., 'farthest object', "
    "'nearest object', 'others', 'vertical_relationship'). 'others' also represents features "
    "of the object. 'num' represents the number of items in the same category within the "
    "scene. If 'num' equals 2, use the comparative form for the spatial location; if it is "
    "greater than 2, use the superlative form for the spatial location. Don't mention the "
    "instance ID of the object. Make the queries as short as possible to include only the "
    "necessary information. Please only ask for general changes, and don't ask about the "
    "specific change of the object."
)

_QUERY_EXAMPLE_DATA = {
    "object": "nightstand_8",
    "tense": "past",
    "num": 2,
    "features": [
        {"nearest_objs": ["nearest to the curtain"]},
        {"vertical_relationships": ["frame standing on nightstand", "lamp supported by nightstand"]},
        {"farthest_objs": ["farthest to the wardrobe"]},
    ],
}

_QUERY_EXAMPLE_ANSWER = (
    "'Query 1': 'How has the nightstand that was nearer to the curtain been altered?' "
    "'Query 2': 'Which updates have been made to the nightstand that had a frame and a lamp on it?' "
    "'Query 3': 'Could you describe what modifications were applied to the nightstand that stood "
    "farther from the wardrobe?' "
    "'Query 4': 'What changes have been made to the nightstand that stood farther from the wardrobe?' "
    "'Query 5': 'How has the nightstand that was farther from the wardrobe been altered?' "
    "'Query 6': 'What changes have been made to the nightstand that stood nearer to the curtain?' "
    "'Query 7': 'What kind of changes were made to the nightstand set farther from the wardrobe?' "
    "'Query 8': 'How has the nightstand that was nearer to the curtain been altered?' "
    "'Query 9': 'Please explain what has been adjusted on the nightstand situated farther from the wardrobe.' "
    "'Query 10': 'What revisions have taken place regarding the nightstand that was at a distance from the wardrobe?'"
)

QA_SYSTEM = (
    "You are an AI visual assistant tasked with generating question and answer pairs based on "
    "changes observed in a sequence of scene images. The scenes detail the journey along a "
    "familiar route, highlighting shifts in object positioning and attributes. Your questions "
    "should cover the following areas:\n\n"
    "Warning: Query if there is any changed object that obstructs the familiar route to a "
    "target object. If an object has the attribute 'Warning' means it becomes an emerged "
    "obstacle towards the target object in the list. Only mention one target object in the "
    "question.\n"
    "Egocentric Distance Old/ Egocentric Distance ('How far ...'): Calculate the distance "
    "from the observer to the current or original location of objects. Prioritize the "
    "'egocentric distance old' if the change exists. Allocentric Displacement ('How far ...'): "
    "ask about 'move_distance' of a specific object. Egocentric Direction Old/ Egocentric "
    "Direction ('In which direction ...'): Determine the current or original orientation of "
    "objects in relation to the observer. Prioritize the 'egocentric direction old' if the "
    "change exists.\n"
    "Allocentric Relationship ('Where'): Examine the old or current vertical spatial "
    "relationships between objects.\n"
    "Counting: Count objects of a specific type in a direction to the observer (front, left, "
    "behind, right).\n"
    "Existence: Note the addition or removal of specific objects.\n"
    "Attribute: Ask about a specific aspect of an object, focusing on its status, color, and "
    "material. Questions start with like 'What is the status/ color/ material?'.\n"
    "Affordance: Check for objects serving specific purposes in the observer's immediate "
    "vicinity.\n\n"
    "For each scenario, generate 15 questions and answer pairs addressing these topics to "
    "effectively map the changes in the scene. Don't ask anything about the wall, the "
    "ceiling, or the floor. Don't answer the direction and distance together. Don't mention "
    "numbers in the question. 'Where' is only for an egocentric relationship. Each answer "
    "should be a maximum of 5 words. Exclude non-present objects. Don't ask questions that "
    "cannot be answered. Don't ask for the direction of the movement. Please don't confuse "
    "shape with size. The output is in the format with 'Q' for the question, 'A' for the "
    "answer, 'O' for the reference object, and 'Type' for the type of question and answer "
    "pairs."
)

JUDGE_GENERAL_SYSTEM = (
    "Score open-ended answers from 1 to 5 based on accuracy to the ground truth.\n\n"
    "Score 2-4: Reflect partial correctness or minor errors.\n\n"
    "Criteria:\n\n"
    "Affordance: Question: Is there any furniture to rest feet on nearby? Ground Truth: Yes. "
    "Example Response: Yes, there is an ottoman nearby. Score: 5 (Correct match).\n"
    "Attribute: Question: What is the color of the ottoman? Ground Truth: Blue, red, brown. "
    "Example Response: The ottoman is brown. Score: 3 (Partial match).\n"
    "Existence: Question: Is there a chair on my left? Ground Truth: Yes. Example Response: "
    "Yes, there is a chair on the left. Score: 5 (Correct match).\n"
    "Counting: Question: How many tables are in the room? Ground Truth: Three Examples. "
    "Response: Two. Score: 1 (Significant discrepancy).\n"
    "Warning: Question: Are there any changed objects on my familiar route to the door? "
    "Ground Truth: Yes, a chair. Example Response: Yes, there is a table on the way to the "
    "door. Score: 2 (Major incorrect).\n"
    "Allocentric Relationship: Question: Where is the kettle? Ground Truth: On the kitchen "
    "cabinet. Example Response: The kettle is on the kitchen counter. Score: 4 (Approximate "
    "match).\n\n"
    "Output only the score."
)

JUDGE_DIRECTION_SYSTEM = (
    "Score open-ended answers from 1 to 5 based on accuracy to the ground truth.\n\n"
    "Score 2-4: Reflect partial correctness or minor errors.\n\n"
    "Mapping of proximity direction and clock face: front (from 11 to 1 o'clock), left (from "
    "8 to 10 o'clock), right (from 2 to 4 o'clock), back (from 5 to 7 o'clock).\n\n"
    "Criteria:\n\n"
    "Score 5: If the difference is less than or equal to 1 o'clock on the clock face, e.g., "
    "GT: '11 o'clock', Response: '10 o'clock'.\n"
    "Score 4: If the response is in the correct proximity direction, e.g., GT: '6 o'clock'"
    "(back), Response: 'Back'.\n"
    "Score 3: If the response is adjacent to the correct direction, e.g., GT: '11 o'clock'"
    "(front left), Response: 'Left'.\n"
    "Score 2: If the response has a significant directional error but is not completely "
    "opposite, e.g., GT: '3 o'clock'(right), Response: 'Back'.\n"
    "Score 1: If the response is in the opposite proximity direction to the ground truth, "
    "e.g., GT: '9 o'clock'(left), Response: '4 o'clock'(right).\n\n"
    "Output only the score."
)

JUDGE_LONGFORM_SYSTEM = (
    "You are an intelligent evaluator tasked with assessing the correctness and semantic "
    "similarity of model-generated answers to question-answering pairs.\n"
    "Your goal is to compare the predicted answer with the reference (correct) answer and "
    "assign a score based on how well they align in meaning. Use the following scoring "
    "rubric:\n\n"
    "Score 5: Completely correct or semantically equivalent.\n\n"
    "Score 4: Key information is correct, with minor inaccuracies or omissions.\n\n"
    "Score 3: Some relevant information, but lacks sufficient correctness or completeness.\n\n"
    "Score 2: Mostly incorrect, but shows some relevance to the question.\n\n"
    "Score 1: Completely incorrect or nonsensical.\n\n"
    "Your response must be a single integer from 1 to 5, with no additional text or "
    "explanation."
)

_JUDGE_USER = "Question: {question}\nGround Truth: {ground_truth}\nResponse: {response}"

TEMPLATES: dict[str, PromptTemplate] = {
    "situation_expand": PromptTemplate(
        template_id="situation_expand",
        system_text=SITUATION_EXPAND_SYSTEM,
        required_fields=("brief", "objects"),
        example_turns=(
            (
                f"brief situation: sitting on sofa_22, object attributes: {_dumps(_SIT_EXAMPLE_DATA)}",
                _SIT_EXAMPLE_ANSWER,
            ),
            (
                f"brief situation: interacting with sink_7, object attributes: {_dumps(_INTERACT_EXAMPLE_DATA)}",
                _INTERACT_EXAMPLE_ANSWER,
            ),
            (
                f"brief situation: standing with kitchen counter_2 12 o'clock, object attributes: {_dumps(_STAND_EXAMPLE_DATA)}",
                _STAND_EXAMPLE_ANSWER,
            ),
        ),
        user_format="brief situation: {brief}, object attributes: {objects}",
    ),
    "longform_gen": PromptTemplate(
        template_id="longform_gen",
        system_text=LONGFORM_SYSTEM,
        required_fields=("brief", "groups"),
        example_turns=(
            (
                f"brief situation: standing with chair_34 9 o'clock, object attributes: {_dumps(_LONGFORM_EXAMPLE_DATA)}",
                _LONGFORM_EXAMPLE_ANSWER,
            ),
        ),
        user_format="brief situation: {brief}, object attributes: {groups}",
    ),
    "query_paraphrase": PromptTemplate(
        template_id="query_paraphrase",
        system_text=QUERY_SYSTEM,
        required_fields=("object", "tense", "num", "features"),
        example_turns=((_dumps(_QUERY_EXAMPLE_DATA), _QUERY_EXAMPLE_ANSWER),),
        user_format="{payload}",
    ),
    "qa_gen": PromptTemplate(
        template_id="qa_gen",
        system_text=QA_SYSTEM,
        required_fields=("groups",),
        user_format="{payload}",
    ),
    "judge_general": PromptTemplate(
        template_id="judge_general",
        system_text=JUDGE_GENERAL_SYSTEM,
        required_fields=("question", "ground_truth", "response"),
        user_format=_JUDGE_USER,
    ),
    "judge_direction": PromptTemplate(
        template_id="judge_direction",
        system_text=JUDGE_DIRECTION_SYSTEM,
        required_fields=("question", "ground_truth", "response"),
        user_format=_JUDGE_USER,
    ),
    "judge_longform": PromptTemplate(
        template_id="judge_longform",
        system_text=JUDGE_LONGFORM_SYSTEM,
        required_fields=("question", "ground_truth", "response"),
        user_format=_JUDGE_USER,
    ),
}


def render_prompt(template_id: str, payload: Mapping[str, Any]) -> list[dict[str, str]]:
    """Chat messages for a template: system text, worked examples, then the
    payload substituted into the user turn (JSON-serialized where structured)."""
    if template_id not in TEMPLATES:
        raise PayloadError(f"unknown template '{template_id}'")
    template = TEMPLATES[template_id]
    for fieldname in template.required_fields:
        if fieldname not in payload:
            raise PayloadError(f"{template_id}: payload missing required field '{fieldname}'")
    values: dict[str, str] = {}
    for key, value in payload.items():
        values[key] = value if isinstance(value, str) else _dumps(value)
    values["payload"] = _dumps({k: payload[k] for k in sorted(payload)})
    messages = [{"role": "system", "content": template.system_text}]
    if template_id == "situation_expand" and payload.get("category") in ("sitting", "interacting", "standing"):
        order = {"sitting": 0, "interacting": 1, "standing": 2}
        user, assistant = template.example_turns[order[payload["category"]]]
        messages += [{"role": "user", "content": user}, {"role": "assistant", "content": assistant}]
    else:
        for user, assistant in template.example_turns:
            messages += [{"role": "user", "content": user}, {"role": "assistant", "content": assistant}]
    messages.append({"role": "user", "content": template.user_format.format(**values)})
    return messages
