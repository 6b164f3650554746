/**
 * Captured service responses for one finished alignment job over a short
 * synthetic utterance ("pan woda kot"). The annotation and peaks are real
 * artifacts; only the job id was rewritten.
 */

import type { AnnotationDoc, JobRecord, PeaksResponse } from "../src/types.js";

export const FIXTURE_RECORD: JobRecord = {
  "id": "J1",
  "tool": "align",
  "state": "done",
  "inputs": {
    "audio": {
      "size": 69004,
      "media_type": "audio/wav"
    },
    "transcript": {
      "size": 12,
      "media_type": "text/plain; charset=utf-8"
    }
  },
  "params": {},
  "results": {
    "alignment.TextGrid": {
      "size": 2512,
      "media_type": "text/plain; charset=utf-8"
    },
    "alignment.json": {
      "size": 2592,
      "media_type": "application/json"
    },
    "meta.json": {
      "size": 52,
      "media_type": "application/json"
    }
  },
  "error": null,
  "created": 1787712414.6684442,
  "started": 1787712414.6687207,
  "finished": 1787712414.689179
} as JobRecord;

export const FIXTURE_ANNOTATION: AnnotationDoc = {
  "version": 1,
  "sample_rate": 16000,
  "audio": "",
  "levels": [
    {
      "name": "words",
      "type": "interval",
      "items": [
        {
          "label": "pan",
          "start": 3680,
          "duration": 6560,
          "score": -22.782513320861124
        },
        {
          "label": "woda",
          "start": 14560,
          "duration": 8800,
          "score": -32.00071748338749
        },
        {
          "label": "kot",
          "start": 25760,
          "duration": 6080,
          "score": -26.50949934619475
        }
      ]
    },
    {
      "name": "phones",
      "type": "interval",
      "items": [
        {
          "label": "sil",
          "start": 0,
          "duration": 3680,
          "score": -22.65573240554779
        },
        {
          "label": "p",
          "start": 3680,
          "duration": 2560,
          "score": -16.43609079816416
        },
        {
          "label": "a",
          "start": 6240,
          "duration": 1920,
          "score": -14.734667811114692
        },
        {
          "label": "n",
          "start": 8160,
          "duration": 2080,
          "score": -38.02227535779255
        },
        {
          "label": "sil",
          "start": 10240,
          "duration": 4320,
          "score": -46.20342084686518
        },
        {
          "label": "v",
          "start": 14560,
          "duration": 480,
          "score": -239.97129017227212
        },
        {
          "label": "o",
          "start": 15040,
          "duration": 3840,
          "score": -24.615341999411054
        },
        {
          "label": "d",
          "start": 18880,
          "duration": 1920,
          "score": -22.058623676806558
        },
        {
          "label": "a",
          "start": 20800,
          "duration": 2560,
          "score": -11.540868685121934
        },
        {
          "label": "sil",
          "start": 23360,
          "duration": 2400,
          "score": -56.8200182338794
        },
        {
          "label": "k",
          "start": 25760,
          "duration": 2560,
          "score": -26.529877209809072
        },
        {
          "label": "o",
          "start": 28320,
          "duration": 2240,
          "score": -18.990971192549235
        },
        {
          "label": "t",
          "start": 30560,
          "duration": 1280,
          "score": -39.626167887845796
        },
        {
          "label": "sil",
          "start": 31840,
          "duration": 2400,
          "score": -27.51835737879112
        }
      ]
    }
  ]
};

export const FIXTURE_PEAKS: PeaksResponse = {
  "duration": 2.155,
  "sample_rate": 16000,
  "bins": 64,
  "peaks": [
    [
      -0.0107,
      0.0106
    ],
    [
      -0.0088,
      0.0086
    ],
    [
      -0.0085,
      0.0084
    ],
    [
      -0.0091,
      0.0091
    ],
    [
      -0.0097,
      0.0102
    ],
    [
      -0.0087,
      0.0084
    ],
    [
      -0.6125,
      0.6038
    ],
    [
      -0.5997,
      0.6162
    ],
    [
      -0.6006,
      0.6046
    ],
    [
      -0.5951,
      0.6053
    ],
    [
      -0.607,
      0.6124
    ],
    [
      -0.6122,
      0.5953
    ],
    [
      -0.6072,
      0.6122
    ],
    [
      -0.6095,
      0.6042
    ],
    [
      -0.6071,
      0.6071
    ],
    [
      -0.5995,
      0.5925
    ],
    [
      -0.5989,
      0.6081
    ],
    [
      -0.6191,
      0.6063
    ],
    [
      -0.5949,
      0.6039
    ],
    [
      -0.6042,
      0.62
    ],
    [
      -0.0084,
      0.0081
    ],
    [
      -0.0087,
      0.0077
    ],
    [
      -0.0081,
      0.0105
    ],
    [
      -0.5961,
      0.6098
    ],
    [
      -0.6093,
      0.598
    ],
    [
      -0.6041,
      0.6059
    ],
    [
      -0.6195,
      0.602
    ],
    [
      -0.6059,
      0.6086
    ],
    [
      -0.6051,
      0.6055
    ],
    [
      -0.6109,
      0.614
    ],
    [
      -0.5982,
      0.6088
    ],
    [
      -0.6134,
      0.606
    ],
    [
      -0.5981,
      0.6028
    ],
    [
      -0.5966,
      0.6027
    ],
    [
      -0.5923,
      0.6052
    ],
    [
      -0.6025,
      0.6173
    ],
    [
      -0.6042,
      0.5964
    ],
    [
      -0.5993,
      0.6078
    ],
    [
      -0.6171,
      0.6005
    ],
    [
      -0.6054,
      0.5993
    ],
    [
      -0.5964,
      0.5966
    ],
    [
      -0.607,
      0.5972
    ],
    [
      -0.5925,
      0.5928
    ],
    [
      -0.6007,
      0.6039
    ],
    [
      -0.5955,
      0.6001
    ],
    [
      -0.0086,
      0.0078
    ],
    [
      -0.0104,
      0.0122
    ],
    [
      -0.618,
      0.5921
    ],
    [
      -0.6017,
      0.601
    ],
    [
      -0.6066,
      0.6062
    ],
    [
      -0.612,
      0.6134
    ],
    [
      -0.604,
      0.6009
    ],
    [
      -0.6138,
      0.6099
    ],
    [
      -0.6044,
      0.5909
    ],
    [
      -0.6,
      0.6156
    ],
    [
      -0.606,
      0.599
    ],
    [
      -0.6154,
      0.6052
    ],
    [
      -0.5987,
      0.6031
    ],
    [
      -0.6099,
      0.5969
    ],
    [
      -0.5961,
      0.6105
    ],
    [
      -0.008,
      0.0096
    ],
    [
      -0.009,
      0.0104
    ],
    [
      -0.0096,
      0.0088
    ],
    [
      -0.0099,
      0.0078
    ]
  ]
} as PeaksResponse;

/** Deep-cloned fixture annotation, safe to edit in tests. */
export function cloneAnnotation(): AnnotationDoc {
  return JSON.parse(JSON.stringify(FIXTURE_ANNOTATION)) as AnnotationDoc;
}

/** Time region (seconds) spanning exactly the fixture word `label`. */
export function wordRegion(label: string): { t0: number; t1: number } {
  const sr = FIXTURE_ANNOTATION.sample_rate;
  const words = FIXTURE_ANNOTATION.levels[0]!;
  const item = words.items.find((it) => it.label === label);
  if (item === undefined) throw new Error(`no fixture word ${label}`);
  return { t0: item.start / sr, t1: (item.start + item.duration) / sr };
}

/**
 * A plausible service response for re-aligning the region around "woda" with
 * the replacement word "mama": items inside the region change, everything
 * outside is untouched.
 */
export function editedAnnotation(): AnnotationDoc {
  const doc = cloneAnnotation();
  const region = wordRegion("woda");
  const sr = doc.sample_rate;
  const words = doc.levels[0]!;
  const word = words.items.find((it) => it.label === "woda")!;
  word.label = "mama";
  const phones = doc.levels[1]!;
  const inside = phones.items.filter(
    (it) => it.start / sr >= region.t0 - 1e-9
      && (it.start + it.duration) / sr <= region.t1 + 1e-9
      && it.label !== "sil",
  );
  const labels = ["m", "a", "m", "a"];
  inside.forEach((it, i) => {
    it.label = labels[i % labels.length]!;
  });
  return doc;
}
