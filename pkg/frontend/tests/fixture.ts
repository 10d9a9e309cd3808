/** Builds a real store with the engine CLI and runs the live service for
 * end-to-end UI tests. */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, mkdirSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const QUERY_1 =
  '(*, "United States") AND (trade country, *) AND (percentage, *)';

export const IMPORT_TC = "/country/economy/import_partners/item/trade_country";
export const IMPORT_PCT = "/country/economy/import_partners/item/percentage";

function countryDoc(
  name: string,
  year: number,
  gdpTag: string,
  gdp: string,
  imports: [string, string, number][],
  exports: [string, string][],
): string {
  const importItems = imports
    .map(
      ([tc, pct, rank]) =>
        `<item><trade_country>${tc}</trade_country><percentage>${pct}</percentage><rank>${rank}</rank></item>`,
    )
    .join("");
  const exportItems = exports
    .map(
      ([tc, pct]) =>
        `<item><trade_country>${tc}</trade_country><percentage>${pct}</percentage></item>`,
    )
    .join("");
  return (
    `<country>${name}<year>${year}</year><economy><${gdpTag}>${gdp}</${gdpTag}>` +
    `<import_partners>${importItems}</import_partners>` +
    `<export_partners>${exportItems}</export_partners></economy></country>`
  );
}

const DOCS: Record<string, string> = {
  "factbook_canada_2007.xml": countryDoc(
    "Canada", 2007, "gdp_ppp", "1181",
    [["United States", "54.9", 1]],
    [["United States", "78.9"]],
  ),
  "factbook_china_2007.xml": countryDoc(
    "China", 2007, "gdp_ppp", "7043",
    [["Japan", "14.6", 1], ["United States", "7.5", 2]],
    [["United States", "19.1"]],
  ),
  "factbook_mexico_2007.xml": countryDoc(
    "Mexico", 2007, "gdp_ppp", "1353",
    [["United States", "50.9", 1]],
    [["United States", "82.2"]],
  ),
  "factbook_us_2002.xml": countryDoc(
    "United States", 2002, "gdp", "10980",
    [["China", "12.5", 1], ["Canada", "17.8", 2]],
    [["Canada", "23.2"]],
  ),
  "factbook_us_2005.xml": countryDoc(
    "United States", 2005, "gdp", "12360",
    [["China", "13.8", 1], ["Canada", "17.2", 2]],
    [["Canada", "22.8"]],
  ),
  "factbook_us_2007.xml": countryDoc(
    "United States", 2007, "gdp_ppp", "13860",
    [["China", "15", 1], ["Canada", "16.9", 2], ["Mexico", "10.6", 3]],
    [["Canada", "21.4"], ["Mexico", "11.7"]],
  ),
};

const LINKS = [
  { kind: "value_based", source: IMPORT_TC, target: "/country", label: "trade" },
  {
    kind: "value_based",
    source: "/country/economy/export_partners/item/trade_country",
    target: "/country",
    label: "trade",
  },
];

const TRADE_KEY = ["/country", "/country/year", "./trade_country"];
const YEAR_KEY = ["/country", "/country/year"];

const CATALOG_FACTS = [
  { name: "percentage", contexts: [{ context: IMPORT_PCT, key: TRADE_KEY }] },
  {
    name: "gdp",
    contexts: [
      { context: "/country/economy/gdp", key: YEAR_KEY },
      { context: "/country/economy/gdp_ppp", key: YEAR_KEY },
    ],
  },
];

const CATALOG_DIMS = [
  { name: "country", contexts: [{ context: "/country", key: YEAR_KEY }] },
  { name: "year", contexts: [{ context: "/country/year", key: YEAR_KEY }] },
  { name: "import_country", contexts: [{ context: IMPORT_TC, key: TRADE_KEY }] },
];

export function buildStore(): string {
  const root = mkdtempSync(join(tmpdir(), "searchcube-ui-"));
  const xmlDir = join(root, "xml");
  mkdirSync(xmlDir);
  for (const [name, text] of Object.entries(DOCS)) {
    writeFileSync(join(xmlDir, name), text, "utf-8");
  }
  const linksPath = join(root, "links.json");
  writeFileSync(linksPath, JSON.stringify(LINKS), "utf-8");
  const store = join(root, "store");
  const cli = (args: string[]) =>
    execFileSync("python3", ["-m", "searchcube.cli", ...args], { stdio: "pipe" });
  cli(["ingest", "--store", store, "--input", xmlDir, "--links", linksPath]);
  cli(["index", "--store", store]);
  cli(["guides", "--store", store, "--threshold", "0.4"]);
  writeFileSync(join(store, "catalog_facts.json"), JSON.stringify(CATALOG_FACTS), "utf-8");
  writeFileSync(
    join(store, "catalog_dimensions.json"),
    JSON.stringify(CATALOG_DIMS),
    "utf-8",
  );
  return store;
}

export interface LiveService {
  baseUrl: string;
  stop(): void;
}

export async function startLiveService(): Promise<LiveService> {
  const store = buildStore();
  const port = 21000 + Math.floor(Math.random() * 8000);
  const child: ChildProcess = spawn(
    "python3",
    ["-m", "searchcube.cli", "serve", "--store", store, "--port", String(port)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      const response = await fetch(`${baseUrl}/catalog`);
      if (response.ok) {
        break;
      }
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) {
      child.kill();
      throw new Error("service did not come up in time");
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  return {
    baseUrl,
    stop: () => {
      child.kill();
    },
  };
}
