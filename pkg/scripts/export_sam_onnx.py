#!/usr/bin/env python3
"""Export a Segment Anything checkpoint to the encoder.onnx / decoder.onnx
pair consumed by the model-file backend.

Run this on a machine with the extra packages installed:
    pip install torch segment-anything onnx

    python scripts/export_sam_onnx.py \
        --checkpoint sam_vit_b_01ec64.pth --model-type vit_b --out model_dir

The encoder graph embeds the standard pixel normalization, so the backend
feeds raw 0..255 intensities (pixel divisor 1.0). The decoder graph is the
stock multimask export: it takes model-frame point coordinates plus labels
(with the trailing padding point), and returns masks scaled to the original
image size together with predicted-IoU scores.
"""

import argparse
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checkpoint", required=True)
    ap.add_argument("--model-type", default="vit_b",
                    choices=["vit_b", "vit_l", "vit_h"])
    ap.add_argument("--out", required=True)
    ap.add_argument("--opset", type=int, default=17)
    args = ap.parse_args()

    import torch
    from segment_anything import sam_model_registry
    from segment_anything.utils.onnx import SamOnnxModel

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sam = sam_model_registry[args.model_type](checkpoint=args.checkpoint)
    sam.eval()

    class EncoderWithPreprocess(torch.nn.Module):
        def __init__(self, model):
            super().__init__()
            self.model = model
            self.register_buffer(
                "mean", torch.tensor([123.675, 116.28, 103.53]).view(1, 3, 1, 1)
            )
            self.register_buffer(
                "std", torch.tensor([58.395, 57.12, 57.375]).view(1, 3, 1, 1)
            )

        def forward(self, images):
            return self.model.image_encoder((images - self.mean) / self.std)

    encoder = EncoderWithPreprocess(sam)
    dummy = torch.zeros(1, 3, 1024, 1024, dtype=torch.float32)
    with torch.no_grad():
        torch.onnx.export(
            encoder,
            (dummy,),
            str(out / "encoder.onnx"),
            input_names=["images"],
            output_names=["image_embeddings"],
            opset_version=args.opset,
        )
    print(f"wrote {out / 'encoder.onnx'}")

    decoder = SamOnnxModel(sam, return_single_mask=False)
    embed_dim = sam.prompt_encoder.embed_dim
    embed_size = sam.prompt_encoder.image_embedding_size
    mask_size = [4 * s for s in embed_size]
    dummy_inputs = {
        "image_embeddings": torch.randn(1, embed_dim, *embed_size),
        "point_coords": torch.randint(0, 1024, (1, 5, 2), dtype=torch.float),
        "point_labels": torch.randint(0, 4, (1, 5), dtype=torch.float),
        "mask_input": torch.randn(1, 1, *mask_size, dtype=torch.float),
        "has_mask_input": torch.tensor([0], dtype=torch.float),
        "orig_im_size": torch.tensor([1010, 984], dtype=torch.float),
    }
    with torch.no_grad():
        torch.onnx.export(
            decoder,
            tuple(dummy_inputs.values()),
            str(out / "decoder.onnx"),
            input_names=list(dummy_inputs.keys()),
            output_names=["masks", "iou_predictions", "low_res_masks"],
            dynamic_axes={
                "point_coords": {1: "num_points"},
                "point_labels": {1: "num_points"},
            },
            opset_version=args.opset,
        )
    print(f"wrote {out / 'decoder.onnx'}")


if __name__ == "__main__":
    main()
