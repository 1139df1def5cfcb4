import { ApiClient } from "./api.js";
import { Dashboard } from "./app.js";

const byId = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
};

const client = new ApiClient(""); // same-origin API
new Dashboard(client, {
  filters: byId("filters"),
  modalSplit: byId("modal-split"),
  od: byId("od"),
  carbon: byId("carbon"),
  trips: byId("trips"),
  status: byId("status"),
}).start();
