export class EnvironmentError extends Error {}

export interface Encoder {
  /** Identifier recorded in the sidecar metadata. */
  readonly name: string;
  /** Pooling rule recorded in the sidecar metadata. */
  readonly pooling: string;
  readonly maxTokens: number;
  /** Resolves the vector length (loads the model on first use). */
  dim(): Promise<number>;
  encodeBatch(texts: string[]): Promise<Float32Array[]>;
}

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const U64 = 0xffffffffffffffffn;

export function fnv1a64(data: Buffer): bigint {
  let h = FNV_OFFSET;
  for (const byte of data) {
    h ^= BigInt(byte);
    h = (h * FNV_PRIME) & U64;
  }
  return h;
}

/**
 * Deterministic offline encoder: L2-normalized FNV-1a bucket counts over
 * the first maxTokens whitespace tokens and their adjacent bigrams. It is
 * a wiring/smoke encoder, not a semantic model; select it with a
 * `hash:<dim>` model name.
 */
export function hashEncoder(dim: number, maxTokens = 128): Encoder {
  return {
    name: `hash:${dim}`,
    pooling: 'hashed-bag',
    maxTokens,
    async dim() {
      return dim;
    },
    async encodeBatch(texts) {
      return texts.map((text) => {
        const vec = new Float32Array(dim);
        const tokens = text.split(/\s+/u).filter((t) => t.length > 0).slice(0, maxTokens);
        const bump = (s: string) => {
          vec[Number(fnv1a64(Buffer.from(s, 'utf-8')) % BigInt(dim))] += 1;
        };
        tokens.forEach(bump);
        for (let i = 0; i + 1 < tokens.length; i++) {
          bump(`${tokens[i]} ${tokens[i + 1]}`);
        }
        let norm = 0;
        for (const v of vec) norm += v * v;
        norm = Math.sqrt(norm);
        if (norm > 0) {
          for (let i = 0; i < dim; i++) vec[i] /= norm;
        }
        return vec;
      });
    },
  };
}

/**
 * Pretrained transformer in feature-extraction mode via
 * @huggingface/transformers, pooled with the classification-token vector.
 * The dependency is resolved lazily so offline installs work; a missing
 * package or an unobtainable checkpoint is an environment error.
 */
export function transformerEncoder(model: string, maxTokens = 128): Encoder {
  let loaded: Promise<{ tokenizer: any; net: any; hidden: number }> | null = null;

  async function load() {
    if (loaded === null) {
      loaded = (async () => {
        let mod: any;
        try {
          // optional runtime dependency; resolved dynamically so installs
          // without it still build and offline runs can use hash:<dim>
          const specifier = '@huggingface/transformers';
          mod = await import(specifier);
        } catch (err) {
          throw new EnvironmentError(
            `@huggingface/transformers is not installed; install it to run ` +
              `checkpoint '${model}', or use a hash:<dim> test encoder (${(err as Error).message})`,
          );
        }
        try {
          const tokenizer = await mod.AutoTokenizer.from_pretrained(model);
          const net = await mod.AutoModel.from_pretrained(model);
          const hidden = net.config.hidden_size;
          return { tokenizer, net, hidden };
        } catch (err) {
          throw new EnvironmentError(
            `cannot load checkpoint '${model}': ${(err as Error).message}`,
          );
        }
      })();
    }
    return loaded;
  }

  return {
    name: model,
    pooling: 'cls',
    maxTokens,
    async dim() {
      return (await load()).hidden;
    },
    async encodeBatch(texts) {
      const { tokenizer, net, hidden } = await load();
      const inputs = await tokenizer(texts, {
        padding: true,
        truncation: true,
        max_length: maxTokens,
      });
      const output = await net(inputs);
      const state = output.last_hidden_state;
      const [batch, seq] = state.dims;
      const data: Float32Array = state.data;
      const vectors: Float32Array[] = [];
      for (let b = 0; b < batch; b++) {
        // classification-token vector = first token of each sequence
        vectors.push(Float32Array.from(data.subarray(b * seq * hidden, b * seq * hidden + hidden)));
      }
      return vectors;
    },
  };
}

export function selectEncoder(model: string, maxTokens: number): Encoder {
  const hashMatch = /^hash:(\d+)$/.exec(model);
  if (hashMatch) {
    return hashEncoder(Number(hashMatch[1]), maxTokens);
  }
  return transformerEncoder(model, maxTokens);
}
