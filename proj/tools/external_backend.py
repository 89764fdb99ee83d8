#!/usr/bin/env python3
"""Helper process for the external encoder and segmenter backends.

The C++ side exchanges .npy arrays and JSON files through a temporary
directory:

  encode  --model M --weights W --device D --input image.npy --output feats.npy
      image.npy: float32 (H, W, C) in [0, 1], H and W multiples of the patch size
      feats.npy: float32 (D, H/14, W/14) patch features

  segment --model M --weights W --device D --image image.npy --prompts p.json
          --output masks.npy --scores scores.json
      p.json: {"frame": [H, W], "bbox": [r0, c0, r1, c1] | null,
               "points": [{"row", "col", "label", "kind"}, ...]}
      masks.npy: float32 (K, H, W) in {0, 1}; scores.json: K floats

Needs torch plus, for segmentation, the segment_anything package.
"""

import argparse
import json
import sys

import numpy as np

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


def as_rgb(image):
    if image.shape[2] == 1:
        image = np.repeat(image, 3, axis=2)
    return np.clip(image, 0.0, 1.0)


def encode(args):
    import torch

    model = torch.hub.load("facebookresearch/dinov2", args.model, pretrained=False)
    model.load_state_dict(torch.load(args.weights, map_location="cpu"))
    model.eval().to(args.device)
    image = as_rgb(np.load(args.input).astype(np.float32))
    h, w = image.shape[:2]
    x = (image - IMAGENET_MEAN) / IMAGENET_STD
    x = torch.from_numpy(x.transpose(2, 0, 1)).unsqueeze(0).to(args.device)
    patch = model.patch_size
    with torch.no_grad():
        tokens = model.forward_features(x)["x_norm_patchtokens"][0]
    feats = tokens.reshape(h // patch, w // patch, -1).permute(2, 0, 1)
    np.save(args.output, feats.cpu().numpy().astype(np.float32))


SAM_KINDS = {"sam_vit_h": "vit_h", "sam_vit_b": "vit_b", "medsam_vit_b": "vit_b"}


def segment(args):
    from segment_anything import SamPredictor, sam_model_registry

    sam = sam_model_registry[SAM_KINDS[args.model]](checkpoint=args.weights).to(args.device)
    predictor = SamPredictor(sam)
    image = as_rgb(np.load(args.image).astype(np.float32))
    predictor.set_image((image * 255.0).round().astype(np.uint8))
    with open(args.prompts) as f:
        prompts = json.load(f)

    coords, labels = None, None
    if prompts["points"]:
        coords = np.array([[p["col"], p["row"]] for p in prompts["points"]], dtype=np.float32)
        labels = np.array([p["label"] for p in prompts["points"]], dtype=np.int32)
    box = None
    if prompts["bbox"] is not None:
        r0, c0, r1, c1 = prompts["bbox"]
        box = np.array([c0, r0, c1 + 1, r1 + 1], dtype=np.float32)
    masks, scores, _ = predictor.predict(
        point_coords=coords, point_labels=labels, box=box, multimask_output=True
    )
    np.save(args.output, masks.astype(np.float32))
    with open(args.scores, "w") as f:
        json.dump([float(s) for s in scores], f)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("command", choices=["encode", "segment"])
    parser.add_argument("--model", required=True)
    parser.add_argument("--weights", required=True)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--input")
    parser.add_argument("--image")
    parser.add_argument("--prompts")
    parser.add_argument("--output", required=True)
    parser.add_argument("--scores")
    args = parser.parse_args()
    try:
        encode(args) if args.command == "encode" else segment(args)
    except Exception as exc:  # reported back through the exit status
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
